//! Subject–verb–object extraction from pre-parsed sentences.
//!
//! Sentences carrying semantic-role frames are read through their ARG0 /
//! predicate / ARG1 structure; sentences without frames fall back to
//! dependency rules.

mod conllu;
mod extract;

pub use conllu::{attach_frames, parse_conllu, read_conllu, read_frame_sidecar, write_conllu, FrameRecord};
pub use extract::{extract, extract_dep, extract_srl, span_text, verb_text};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TripletError {
    #[error("sentence {post_id}#{sent_index}: {msg}")]
    InvalidSentence {
        post_id: String,
        sent_index: usize,
        msg: String,
    },
    #[error("sentence {post_id}#{sent_index}: span {start}-{end} outside 1..={len}")]
    SpanOutOfBounds {
        post_id: String,
        sent_index: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub lemma: Option<String>,
    pub upos: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
}

/// Inclusive 1-based token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(i: usize) -> Self {
        Span { start: i, end: i }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    pub predicate: usize,
    pub arguments: Vec<Argument>,
}

impl SrlFrame {
    pub fn role(&self, role: &str) -> Option<Span> {
        self.arguments.iter().find(|a| a.role == role).map(|a| a.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub post_id: String,
    pub sent_index: usize,
    pub tokens: Vec<Token>,
    pub frames: Vec<SrlFrame>,
}

impl ParsedSentence {
    fn invalid(&self, msg: impl Into<String>) -> TripletError {
        TripletError::InvalidSentence {
            post_id: self.post_id.clone(),
            sent_index: self.sent_index,
            msg: msg.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    /// Dependents of `index` in token order.
    pub fn children(&self, index: usize) -> impl Iterator<Item = &Token> + '_ {
        self.tokens.iter().filter(move |t| t.head == index)
    }

    /// Checks indices, heads, acyclicity and frame spans.
    pub fn validate(&self) -> Result<(), TripletError> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(self.invalid("sentence has no tokens"));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(self.invalid(format!("token {} found at position {}", t.index, i + 1)));
            }
            if t.head > n {
                return Err(self.invalid(format!("token {} has head {} beyond {n}", t.index, t.head)));
            }
            if t.head == t.index {
                return Err(self.invalid(format!("token {} is its own head", t.index)));
            }
        }
        if !self.tokens.iter().any(|t| t.head == 0) {
            return Err(self.invalid("no root token"));
        }
        for t in &self.tokens {
            let mut cur = t.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(self.invalid(format!("head cycle through token {}", t.index)));
                }
                cur = self.token(cur).head;
            }
        }
        for f in &self.frames {
            if f.predicate == 0 || f.predicate > n {
                return Err(self.invalid(format!("frame predicate {} out of range", f.predicate)));
            }
            for a in &f.arguments {
                if a.span.start == 0 || a.span.start > a.span.end || a.span.end > n {
                    return Err(self.invalid(format!("{} span {}-{} out of range", a.role, a.span.start, a.span.end)));
                }
            }
            for core in ["ARG0", "ARG1"] {
                if f.arguments.iter().filter(|a| a.role == core).count() > 1 {
                    return Err(self.invalid(format!("frame at {} has more than one {core}", f.predicate)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripletSource {
    Srl,
    Dependency,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: String,
    pub verb: String,
    pub object: String,
    pub post_id: String,
    pub sent_index: usize,
    pub source: TripletSource,
}

/// Extracts from many sentences in parallel; output ordered by
/// `(post_id, sent_index)` then extraction order.
pub fn extract_all(sentences: &[ParsedSentence]) -> Result<Vec<Triplet>, TripletError> {
    use rayon::prelude::*;
    let mut order: Vec<&ParsedSentence> = sentences.iter().collect();
    order.sort_by(|a, b| (a.post_id.as_str(), a.sent_index).cmp(&(b.post_id.as_str(), b.sent_index)));
    let per: Vec<Result<Vec<Triplet>, TripletError>> = order.par_iter().map(|s| extract(s)).collect();
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}
