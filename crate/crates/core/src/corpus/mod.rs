//! Post corpus: ingestion, deduplication, account filtering and keyword
//! subsetting. Text cleaning and tokenization live in the submodules.

mod clean;
mod tokenize;

pub use clean::{clean_text, load_stopwords, CleanRules};
pub use tokenize::{load_user_words, tokenize, UserLexicon};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate post id {id:?}")]
    DuplicateId { id: String, line: usize },
    #[error("category set must not be empty")]
    EmptyCategories,
    #[error("keyword list must contain at least one non-empty phrase")]
    EmptyPhrases,
    #[error("unknown author category {0:?}")]
    UnknownCategory(String),
}

/// Analysis grouping of verified accounts.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AuthorCategory {
    GovernmentMedia,
    Celebrity,
    Other,
}

impl AuthorCategory {
    pub const ALL: [AuthorCategory; 3] = [
        AuthorCategory::GovernmentMedia,
        AuthorCategory::Celebrity,
        AuthorCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuthorCategory::GovernmentMedia => "government_media",
            AuthorCategory::Celebrity => "celebrity",
            AuthorCategory::Other => "other",
        }
    }
}

impl fmt::Display for AuthorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuthorCategory {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "government_media" => Ok(AuthorCategory::GovernmentMedia),
            "celebrity" => Ok(AuthorCategory::Celebrity),
            "other" => Ok(AuthorCategory::Other),
            _ => Err(CorpusError::UnknownCategory(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub author_id: String,
    pub author_category: AuthorCategory,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub attitude_count: u64,
    pub comments_count: u64,
    pub reposts_count: u64,
}

impl Post {
    /// Attitudes + comments + reposts.
    pub fn engagement(&self) -> u64 {
        self.attitude_count + self.comments_count + self.reposts_count
    }
}

/// Immutable, sorted collection of posts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    posts: Vec<Post>,
    pub provenance: String,
    period: Option<(DateTime<Utc>, DateTime<Utc>)>,
}

impl Corpus {
    /// Sorts by `(timestamp, id)` and derives the period from the posts.
    pub fn new(mut posts: Vec<Post>, provenance: impl Into<String>) -> Self {
        posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        let period = match (posts.first(), posts.last()) {
            (Some(first), Some(last)) => Some((first.timestamp, last.timestamp)),
            _ => None,
        };
        Corpus {
            posts,
            provenance: provenance.into(),
            period,
        }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// `None` when the corpus is empty.
    pub fn period(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        self.period
    }

    pub fn get(&self, id: &str) -> Option<&Post> {
        self.posts.iter().find(|p| p.id == id)
    }

    /// Lookup table from post id to post.
    pub fn index(&self) -> HashMap<&str, &Post> {
        self.posts.iter().map(|p| (p.id.as_str(), p)).collect()
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.posts.iter().map(|p| p.id.as_str()).collect()
    }

    /// Keeps posts matching `keep`, preserving order and the original period.
    pub fn retain_by(&self, provenance: impl Into<String>, keep: impl Fn(&Post) -> bool) -> Corpus {
        Corpus {
            posts: self.posts.iter().filter(|p| keep(p)).cloned().collect(),
            provenance: provenance.into(),
            period: self.period,
        }
    }

    /// Serializes as JSON lines in corpus order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for post in &self.posts {
            serde_json::to_writer(&mut out, post)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// Maps canonical post field names to the keys used in a source file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldMap {
    renames: BTreeMap<String, String>,
}

impl FieldMap {
    pub const FIELDS: [&'static str; 8] = [
        "id",
        "author_id",
        "author_category",
        "timestamp",
        "text",
        "attitude_count",
        "comments_count",
        "reposts_count",
    ];

    /// Identity mapping.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rename(mut self, field: &str, source_key: &str) -> Self {
        self.renames.insert(field.to_string(), source_key.to_string());
        self
    }

    fn source_key<'a>(&'a self, field: &'a str) -> &'a str {
        self.renames.get(field).map(String::as_str).unwrap_or(field)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines_read: usize,
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    /// Set when no post was accepted, so the corpus has no time span.
    pub period_undefined: bool,
}

/// Reads a JSON-lines post file.
pub fn load_posts(path: &Path, schema: &FieldMap) -> Result<(Corpus, LoadReport), CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let (corpus, report) = read_posts(std::io::BufReader::new(file), schema)?;
    let provenance = path.display().to_string();
    Ok((Corpus { provenance, ..corpus }, report))
}

/// Parses JSON-lines posts from any reader. Blank lines are skipped.
pub fn read_posts<R: BufRead>(reader: R, schema: &FieldMap) -> Result<(Corpus, LoadReport), CorpusError> {
    let mut posts = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut report = LoadReport::default();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines_read += 1;
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        let post = remap_post(&value, schema).map_err(|msg| CorpusError::Malformed { line: lineno, msg })?;
        if !seen.insert(post.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: post.id,
                line: lineno,
            });
        }
        if post.text.trim().is_empty() {
            report.rejected.push(Rejection {
                line: lineno,
                id: post.id,
                reason: "empty text".to_string(),
            });
            continue;
        }
        posts.push(post);
    }

    report.accepted = posts.len();
    report.period_undefined = posts.is_empty();
    Ok((Corpus::new(posts, "<reader>"), report))
}

fn remap_post(value: &serde_json::Value, schema: &FieldMap) -> Result<Post, String> {
    let obj = value.as_object().ok_or_else(|| "expected a JSON object".to_string())?;
    let mut canonical = serde_json::Map::new();
    for field in FieldMap::FIELDS {
        let key = schema.source_key(field);
        let v = obj
            .get(key)
            .ok_or_else(|| format!("missing field {key:?}"))?;
        canonical.insert(field.to_string(), v.clone());
    }
    serde_json::from_value(serde_json::Value::Object(canonical)).map_err(|e| e.to_string())
}

/// Keeps one post per exact `(author_id, text)` pair, the earliest one.
pub fn deduplicate(corpus: &Corpus) -> Corpus {
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    // corpus order is (timestamp, id), so the first occurrence is the earliest
    let keep: HashSet<&str> = corpus
        .posts
        .iter()
        .filter(|p| seen.insert((p.author_id.as_str(), p.text.as_str())))
        .map(|p| p.id.as_str())
        .collect();
    corpus.retain_by(corpus.provenance.clone(), |p| keep.contains(p.id.as_str()))
}

pub fn filter_accounts(corpus: &Corpus, categories: &BTreeSet<AuthorCategory>) -> Result<Corpus, CorpusError> {
    if categories.is_empty() {
        return Err(CorpusError::EmptyCategories);
    }
    Ok(corpus.retain_by(corpus.provenance.clone(), |p| categories.contains(&p.author_category)))
}

/// Posts whose raw text contains any of `phrases` as a substring.
pub fn keyword_subset<S: AsRef<str>>(corpus: &Corpus, phrases: &[S]) -> Result<Corpus, CorpusError> {
    if phrases.is_empty() || phrases.iter().any(|p| p.as_ref().is_empty()) {
        return Err(CorpusError::EmptyPhrases);
    }
    Ok(corpus.retain_by(corpus.provenance.clone(), |p| {
        phrases.iter().any(|ph| p.text.contains(ph.as_ref()))
    }))
}
