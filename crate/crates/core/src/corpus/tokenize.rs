use std::collections::HashSet;
use std::path::Path;

use unicode_segmentation::UnicodeSegmentation;

use super::clean::parse_word_list;
use super::CorpusError;

/// User dictionary for longest-match segmentation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserLexicon {
    words: HashSet<String>,
    max_chars: usize,
}

impl UserLexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: HashSet<String> = words
            .into_iter()
            .map(Into::into)
            .filter(|w: &String| !w.is_empty())
            .collect();
        let max_chars = words.iter().map(|w| w.chars().count()).max().unwrap_or(0);
        UserLexicon { words, max_chars }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &str) -> bool {
        self.words.contains(w)
    }
}

pub fn load_user_words(path: &Path) -> Result<UserLexicon, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(UserLexicon::new(parse_word_list(&text)))
}

/// Splits `text` into word tokens.
///
/// Lexicon entries are matched greedily (longest first) and must start and
/// end on Unicode word boundaries; everything else falls back to UAX #29
/// words. Segments without any alphanumeric character are dropped.
pub fn tokenize(text: &str, lexicon: Option<&UserLexicon>) -> Vec<String> {
    let segments: Vec<(usize, &str)> = text.split_word_bound_indices().collect();
    let lexicon = lexicon.filter(|l| !l.is_empty());
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < segments.len() {
        let (start, seg) = segments[i];
        if let Some(lex) = lexicon {
            let mut best = None;
            let mut chars = 0;
            for (j, &(s, piece)) in segments.iter().enumerate().skip(i) {
                chars += piece.chars().count();
                if chars > lex.max_chars {
                    break;
                }
                let end = s + piece.len();
                if lex.contains(&text[start..end]) {
                    best = Some((j, end));
                }
            }
            if let Some((j, end)) = best {
                tokens.push(text[start..end].to_string());
                i = j + 1;
                continue;
            }
        }
        if seg.chars().any(char::is_alphanumeric) {
            tokens.push(seg.to_string());
        }
        i += 1;
    }
    tokens
}
