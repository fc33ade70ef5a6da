//! Top-k narrative tables in aligned text and JSON.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use unicode_width::UnicodeWidthStr;

use super::{clusters_for_group, NarrativeCluster, NormalizeError};
use crate::corpus::{AuthorCategory, Corpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportGroup {
    All,
    Category(AuthorCategory),
}

impl ReportGroup {
    pub fn key(self) -> &'static str {
        match self {
            ReportGroup::All => "all",
            ReportGroup::Category(c) => c.as_str(),
        }
    }

    pub fn heading(self) -> &'static str {
        match self {
            ReportGroup::All => "All accounts",
            ReportGroup::Category(AuthorCategory::GovernmentMedia) => "Government/media accounts",
            ReportGroup::Category(AuthorCategory::Celebrity) => "Celebrity accounts",
            ReportGroup::Category(AuthorCategory::Other) => "Other accounts",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "all" {
            return Some(ReportGroup::All);
        }
        s.parse().ok().map(ReportGroup::Category)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSentence {
    pub post_id: String,
    pub text: String,
    pub engagement: u64,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub group: String,
    pub rank: usize,
    pub subject: String,
    pub verb: String,
    pub object: String,
    pub count: usize,
    pub samples: Vec<SampleSentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub k: usize,
    pub rows: Vec<ReportRow>,
}

/// Top `k` clusters for each group with up to `samples_per_row` exemplar
/// posts, ranked by engagement sum then earliest timestamp then post id.
pub fn top_table(
    clusters: &[NarrativeCluster],
    k: usize,
    corpus: &Corpus,
    samples_per_row: usize,
    groups: &[ReportGroup],
    title: &str,
) -> Result<Report, NormalizeError> {
    if k == 0 {
        return Err(NormalizeError::ZeroK);
    }
    let index = corpus.index();
    let mut rows = Vec::new();
    for &group in groups {
        let projected;
        let source: &[NarrativeCluster] = match group {
            ReportGroup::All => {
                projected = {
                    let mut all = clusters.to_vec();
                    super::sort_clusters(&mut all);
                    all
                };
                &projected
            }
            ReportGroup::Category(c) => {
                projected = clusters_for_group(clusters, c, corpus);
                &projected
            }
        };
        for (rank, c) in source.iter().take(k).enumerate() {
            let ids: BTreeSet<&str> = c.members.iter().map(|t| t.post_id.as_str()).collect();
            let mut posts: Vec<_> = ids.iter().filter_map(|id| index.get(id).copied()).collect();
            posts.sort_by(|a, b| {
                b.engagement()
                    .cmp(&a.engagement())
                    .then_with(|| a.timestamp.cmp(&b.timestamp))
                    .then_with(|| a.id.cmp(&b.id))
            });
            let samples = posts
                .into_iter()
                .take(samples_per_row)
                .map(|p| SampleSentence {
                    post_id: p.id.clone(),
                    text: p.text.clone(),
                    engagement: p.engagement(),
                    timestamp: p.timestamp,
                })
                .collect();
            rows.push(ReportRow {
                group: group.key().to_string(),
                rank: rank + 1,
                subject: c.canonical.subject.clone(),
                verb: c.canonical.verb.clone(),
                object: c.canonical.object.clone(),
                count: c.count,
                samples,
            });
        }
    }
    Ok(Report {
        title: title.to_string(),
        k,
        rows,
    })
}

const HEADERS: [&str; 5] = ["ARG0", "B-V", "ARG1", "counts", "Sample sentence(s)"];

fn pad(s: &str, width: usize) -> String {
    let w = UnicodeWidthStr::width(s);
    format!("{s}{}", " ".repeat(width.saturating_sub(w)))
}

fn pad_left(s: &str, width: usize) -> String {
    let w = UnicodeWidthStr::width(s);
    format!("{}{s}", " ".repeat(width.saturating_sub(w)))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Report {
    /// Column-aligned table; one section per group, samples stacked in the
    /// last column.
    pub fn to_text(&self) -> String {
        let mut widths = [0usize; 4];
        for (i, h) in HEADERS[..4].iter().enumerate() {
            widths[i] = h.width();
        }
        for r in &self.rows {
            widths[0] = widths[0].max(r.subject.width());
            widths[1] = widths[1].max(r.verb.width());
            widths[2] = widths[2].max(r.object.width());
            widths[3] = widths[3].max(r.count.to_string().len());
        }
        let sep = " | ";
        let lead = widths.iter().sum::<usize>() + 4 * sep.len();
        let mut out = String::new();
        let _ = writeln!(out, "Top {} Triplets: {}", self.k, self.title);

        let mut current: Option<&str> = None;
        for r in &self.rows {
            if current != Some(r.group.as_str()) {
                current = Some(r.group.as_str());
                let heading = ReportGroup::parse(&r.group).map_or(r.group.as_str(), |g| g.heading());
                let _ = writeln!(out);
                let _ = writeln!(out, "{}: {heading}", self.title);
                let header = format!(
                    "{}{sep}{}{sep}{}{sep}{}{sep}{}",
                    pad(HEADERS[0], widths[0]),
                    pad(HEADERS[1], widths[1]),
                    pad(HEADERS[2], widths[2]),
                    pad_left(HEADERS[3], widths[3]),
                    HEADERS[4]
                );
                let _ = writeln!(out, "{}", header.trim_end());
                let _ = writeln!(out, "{}", "-".repeat(lead + HEADERS[4].len()));
            }
            let first = r.samples.first().map(|s| one_line(&s.text)).unwrap_or_default();
            let line = format!(
                "{}{sep}{}{sep}{}{sep}{}{sep}{first}",
                pad(&r.subject, widths[0]),
                pad(&r.verb, widths[1]),
                pad(&r.object, widths[2]),
                pad_left(&r.count.to_string(), widths[3]),
            );
            let _ = writeln!(out, "{}", line.trim_end());
            for s in r.samples.iter().skip(1) {
                let cont = format!(
                    "{}{sep}{}{sep}{}{sep}{}{sep}{}",
                    pad("", widths[0]),
                    pad("", widths[1]),
                    pad("", widths[2]),
                    pad("", widths[3]),
                    one_line(&s.text)
                );
                let _ = writeln!(out, "{}", cont.trim_end());
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{post, trip};
    use super::super::{cluster, SynonymLexicon};
    use super::*;

    fn fixture() -> (Vec<NarrativeCluster>, Corpus) {
        let corpus = Corpus::new(
            vec![
                post("p1", AuthorCategory::GovernmentMedia, 0, 5),
                post("p2", AuthorCategory::GovernmentMedia, 1, 50),
                post("p3", AuthorCategory::GovernmentMedia, 2, 50),
                post("p4", AuthorCategory::Celebrity, 3, 9),
            ],
            "t",
        );
        let ts = vec![
            trip("USA", "implements sanction on", "Russia", "p1"),
            trip("USA", "implements sanction on", "Russia", "p3"),
            trip("USA", "implements sanction on", "Russia", "p2"),
            trip("Russia", "invades", "Ukraine", "p4"),
            trip("Russia", "invades", "Ukraine", "p1"),
            trip("NATO", "expands", "east", "p2"),
        ];
        (cluster(&ts, &SynonymLexicon::default(), &corpus).unwrap(), corpus)
    }

    #[test]
    fn samples_ranked_by_engagement_then_time() {
        let (cl, corpus) = fixture();
        let r = top_table(&cl, 5, &corpus, 3, &[ReportGroup::All], "war").unwrap();
        assert_eq!(r.rows[0].subject, "USA");
        let ids: Vec<&str> = r.rows[0].samples.iter().map(|s| s.post_id.as_str()).collect();
        assert_eq!(ids, ["p2", "p3", "p1"]);
    }

    #[test]
    fn per_group_rows_and_truncation() {
        let (cl, corpus) = fixture();
        let groups = [ReportGroup::Category(AuthorCategory::GovernmentMedia), ReportGroup::Category(AuthorCategory::Celebrity)];
        let r = top_table(&cl, 2, &corpus, 1, &groups, "war").unwrap();
        let keys: Vec<(&str, usize, &str)> = r.rows.iter().map(|x| (x.group.as_str(), x.rank, x.subject.as_str())).collect();
        assert_eq!(keys, [("government_media", 1, "USA"), ("government_media", 2, "NATO"), ("celebrity", 1, "Russia")]);
        assert!(r.rows.iter().all(|x| x.samples.len() == 1));
        assert!(top_table(&cl, 0, &corpus, 1, &groups, "war").is_err());
    }

    #[test]
    fn equal_counts_ordered_lexicographically() {
        let (cl, corpus) = fixture();
        let r = top_table(&cl, 5, &corpus, 0, &[ReportGroup::Category(AuthorCategory::GovernmentMedia)], "e").unwrap();
        let subj: Vec<&str> = r.rows.iter().map(|x| x.subject.as_str()).collect();
        assert_eq!(subj, ["USA", "NATO", "Russia"]);
    }

    #[test]
    fn text_layout_is_aligned() {
        let (cl, corpus) = fixture();
        let r = top_table(&cl, 5, &corpus, 2, &[ReportGroup::All], "war").unwrap();
        let text = r.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Top 5 Triplets: war");
        assert_eq!(lines[2], "war: All accounts");
        assert!(lines[3].starts_with("ARG0"));
        let bar = |l: &str| l.match_indices(" | ").map(|(i, _)| l[..i].width()).collect::<Vec<_>>();
        let header_bars = bar(lines[3]);
        assert_eq!(header_bars.len(), 4);
        for l in &lines[5..] {
            assert_eq!(bar(l)[..4], header_bars[..]);
        }
        assert_eq!(text, r.to_text());
    }

    #[test]
    fn json_fields() {
        let (cl, corpus) = fixture();
        let r = top_table(&cl, 1, &corpus, 1, &[ReportGroup::All], "war").unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let row = &v["rows"][0];
        for f in ["group", "rank", "subject", "verb", "object", "count", "samples"] {
            assert!(row.get(f).is_some(), "{f}");
        }
        assert_eq!(row["count"], 3);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
