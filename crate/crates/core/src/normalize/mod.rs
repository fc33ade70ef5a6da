//! Synonym normalization, narrative clustering, review sampling and
//! top-k reports.

mod lexicon;
mod report;

pub use lexicon::{load_lexicon, parse_lexicon, LexiconBuilder, LexiconError, Role, RoleMap, Slot, Svo, SynonymLexicon, TripletRule};
pub use report::{top_table, Report, ReportGroup, ReportRow, SampleSentence};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorCategory, Corpus};
use crate::triplets::Triplet;

#[derive(Debug, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("triplet from post {post_id:?} (sentence {sent_index}) has no matching post in the corpus")]
    DanglingPost { post_id: String, sent_index: usize },
    #[error("fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("cannot sample from an empty corpus")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeCluster {
    pub canonical: Svo,
    pub count: usize,
    /// Source triplets before canonicalization, in input order.
    pub members: Vec<Triplet>,
    pub by_group: BTreeMap<AuthorCategory, usize>,
}

impl NarrativeCluster {
    pub fn group_count(&self, group: AuthorCategory) -> usize {
        self.by_group.get(&group).copied().unwrap_or(0)
    }
}

/// Count descending, then canonical tuple ascending.
pub fn sort_clusters(clusters: &mut [NarrativeCluster]) {
    clusters.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.canonical.cmp(&b.canonical)));
}

pub fn cluster(triplets: &[Triplet], lexicon: &SynonymLexicon, corpus: &Corpus) -> Result<Vec<NarrativeCluster>, NormalizeError> {
    let index = corpus.index();
    let canon: Vec<Result<(Svo, AuthorCategory), NormalizeError>> = triplets
        .par_iter()
        .map(|t| {
            let post = index.get(t.post_id.as_str()).ok_or_else(|| NormalizeError::DanglingPost {
                post_id: t.post_id.clone(),
                sent_index: t.sent_index,
            })?;
            Ok((lexicon.canonicalize_svo(&Svo::of(t)), post.author_category))
        })
        .collect();

    let mut groups: BTreeMap<Svo, NarrativeCluster> = BTreeMap::new();
    for (t, c) in triplets.iter().zip(canon) {
        let (key, category) = c?;
        let entry = groups.entry(key.clone()).or_insert_with(|| NarrativeCluster {
            canonical: key,
            count: 0,
            members: Vec::new(),
            by_group: BTreeMap::new(),
        });
        entry.count += 1;
        entry.members.push(t.clone());
        *entry.by_group.entry(category).or_insert(0) += 1;
    }
    let mut out: Vec<NarrativeCluster> = groups.into_values().collect();
    sort_clusters(&mut out);
    Ok(out)
}

/// Restricts clusters to one author group: counts and members are those of
/// the group, empty clusters drop out, and the result is re-sorted.
pub fn clusters_for_group(clusters: &[NarrativeCluster], group: AuthorCategory, corpus: &Corpus) -> Vec<NarrativeCluster> {
    let index = corpus.index();
    let mut out: Vec<NarrativeCluster> = clusters
        .iter()
        .filter_map(|c| {
            let members: Vec<Triplet> = c
                .members
                .iter()
                .filter(|t| index.get(t.post_id.as_str()).is_some_and(|p| p.author_category == group))
                .cloned()
                .collect();
            (!members.is_empty()).then(|| NarrativeCluster {
                canonical: c.canonical.clone(),
                count: members.len(),
                by_group: BTreeMap::from([(group, members.len())]),
                members,
            })
        })
        .collect();
    sort_clusters(&mut out);
    out
}

/// `⌈f·n⌉`, treating products within 1e-9 of an integer as that integer so
/// that e.g. `0.1 · 100` yields 10 rather than 11.
pub fn ceil_fraction(f: f64, n: usize) -> usize {
    let x = f * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (k as usize).min(n)
}

pub fn check_fraction(f: f64) -> Result<(), NormalizeError> {
    if f.is_finite() && f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(NormalizeError::InvalidFraction(f))
    }
}

/// Uniform sample of `⌈f·N⌉` posts without replacement, drawn over the
/// corpus' sorted post order.
pub fn sample_fraction(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Corpus, NormalizeError> {
    check_fraction(fraction)?;
    if corpus.is_empty() {
        return Err(NormalizeError::EmptyCorpus);
    }
    let n = corpus.len();
    let m = ceil_fraction(fraction, n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, n, m).into_vec();
    let keep: std::collections::HashSet<&str> = picked.into_iter().map(|i| corpus.posts()[i].id.as_str()).collect();
    Ok(corpus.retain_by(format!("{} | sample f={fraction} seed={seed}", corpus.provenance), |p| keep.contains(p.id.as_str())))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::Post;
    use crate::triplets::TripletSource;
    use chrono::{TimeZone, Utc};

    pub(crate) fn post(id: &str, cat: AuthorCategory, minute: u32, engagement: u64) -> Post {
        Post {
            id: id.into(),
            author_id: format!("a-{id}"),
            author_category: cat,
            timestamp: Utc.with_ymd_and_hms(2022, 3, 1, 0, minute, 0).unwrap(),
            text: format!("text of {id}"),
            attitude_count: engagement,
            comments_count: 0,
            reposts_count: 0,
        }
    }

    pub(crate) fn trip(s: &str, v: &str, o: &str, post_id: &str) -> Triplet {
        Triplet {
            subject: s.into(),
            verb: v.into(),
            object: o.into(),
            post_id: post_id.into(),
            sent_index: 0,
            source: TripletSource::Srl,
        }
    }

    #[test]
    fn shanghai_variants_form_one_cluster() {
        let lex = parse_lexicon("[verb]\nhas <= add | had | increased\n[object]\nnew patients/deaths <= new affected\n").unwrap();
        let corpus = Corpus::new(
            vec![post("p1", AuthorCategory::GovernmentMedia, 0, 1), post("p2", AuthorCategory::Celebrity, 1, 1)],
            "t",
        );
        let ts = [
            trip("Shanghai", "add", "new patients/deaths", "p1"),
            trip("Shanghai", "had", "new affected", "p2"),
        ];
        let cl = cluster(&ts, &lex, &corpus).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].canonical, Svo::new("Shanghai", "has", "new patients/deaths"));
        assert_eq!(cl[0].count, 2);
        assert_eq!(cl[0].group_count(AuthorCategory::GovernmentMedia), 1);
        assert_eq!(cl[0].group_count(AuthorCategory::Celebrity), 1);
        assert_eq!(cl[0].members, ts.to_vec());
    }

    #[test]
    fn cluster_order_and_errors() {
        let corpus = Corpus::new(vec![post("p", AuthorCategory::Other, 0, 0)], "t");
        let lex = SynonymLexicon::default();
        assert!(cluster(&[], &lex, &corpus).unwrap().is_empty());
        let ts = [trip("b", "v", "o", "p"), trip("a", "v", "o", "p"), trip("c", "v", "o", "p"), trip("c", "v", "o", "p")];
        let cl = cluster(&ts, &lex, &corpus).unwrap();
        let order: Vec<&str> = cl.iter().map(|c| c.canonical.subject.as_str()).collect();
        assert_eq!(order, ["c", "a", "b"]);
        let err = cluster(&[trip("a", "b", "c", "ghost")], &lex, &corpus).unwrap_err();
        assert!(matches!(err, NormalizeError::DanglingPost { .. }));
    }

    #[test]
    fn group_projection() {
        let corpus = Corpus::new(
            vec![post("g", AuthorCategory::GovernmentMedia, 0, 0), post("c", AuthorCategory::Celebrity, 1, 0)],
            "t",
        );
        let ts = [trip("a", "v", "o", "g"), trip("a", "v", "o", "c"), trip("b", "v", "o", "c")];
        let cl = cluster(&ts, &SynonymLexicon::default(), &corpus).unwrap();
        let cel = clusters_for_group(&cl, AuthorCategory::Celebrity, &corpus);
        assert_eq!(cel.len(), 2);
        assert!(cel.iter().all(|c| c.count == 1));
        let gov = clusters_for_group(&cl, AuthorCategory::GovernmentMedia, &corpus);
        assert_eq!(gov.len(), 1);
        assert!(clusters_for_group(&cl, AuthorCategory::Other, &corpus).is_empty());
    }

    fn corpus_of(n: usize) -> Corpus {
        Corpus::new((0..n).map(|i| post(&format!("p{i:03}"), AuthorCategory::Other, (i % 60) as u32, 0)).collect(), "t")
    }

    #[test]
    fn sampling_sizes() {
        let c = corpus_of(100);
        let full = sample_fraction(&c, 1.0, 3).unwrap();
        assert_eq!(full.posts(), c.posts());
        let a = sample_fraction(&c, 0.10, 3).unwrap();
        let b = sample_fraction(&c, 0.10, 3).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a.posts(), b.posts());
        assert_eq!(sample_fraction(&corpus_of(5), 0.10, 0).unwrap().len(), 1);
        assert!(sample_fraction(&c, 0.0, 0).is_err());
        assert!(sample_fraction(&c, 1.5, 0).is_err());
        assert!(sample_fraction(&corpus_of(0), 0.5, 0).is_err());
    }

    #[test]
    fn seeds_differ() {
        let c = corpus_of(200);
        let a = sample_fraction(&c, 0.1, 1).unwrap();
        let b = sample_fraction(&c, 0.1, 2).unwrap();
        assert_ne!(a.posts(), b.posts());
    }

    #[test]
    fn ceiling_rule() {
        assert_eq!(ceil_fraction(0.1, 100), 10);
        assert_eq!(ceil_fraction(0.2, 10), 2);
        assert_eq!(ceil_fraction(0.3, 10), 3);
        assert_eq!(ceil_fraction(0.7, 10), 7);
        assert_eq!(ceil_fraction(0.25, 10), 3);
        assert_eq!(ceil_fraction(1.0, 7), 7);
    }
}
