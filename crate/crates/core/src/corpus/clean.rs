use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanRules {
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub unwrap_hashtags: bool,
    pub drop_digits: bool,
    pub drop_symbols: bool,
    pub stopword_list: BTreeSet<String>,
}

impl Default for CleanRules {
    fn default() -> Self {
        CleanRules {
            strip_urls: true,
            strip_mentions: true,
            unwrap_hashtags: true,
            drop_digits: true,
            drop_symbols: true,
            stopword_list: BTreeSet::new(),
        }
    }
}

impl CleanRules {
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopword_list = words
            .into_iter()
            .map(Into::into)
            .filter(|w: &String| !w.is_empty())
            .collect();
        self
    }
}

/// One token per line, `#` starts a comment.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_word_list(&text))
}

pub(crate) fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[\w\-]+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#([^#\r\n]+)#").unwrap())
}

/// Applies `rules` to `text`. Whitespace runs are always collapsed to a
/// single space and the result is trimmed. Stopwords are removed in place at
/// word-boundary granularity, so unsegmented scripts keep their spacing.
pub fn clean_text(text: &str, rules: &CleanRules) -> String {
    let mut s = text.to_string();
    if rules.strip_urls {
        s = url_re().replace_all(&s, " ").into_owned();
    }
    if rules.strip_mentions {
        s = mention_re().replace_all(&s, " ").into_owned();
    }
    if rules.unwrap_hashtags {
        s = hashtag_re().replace_all(&s, "$1").into_owned();
    }
    if rules.drop_digits {
        s.retain(|c| !c.is_numeric());
    }
    if rules.drop_symbols {
        s = replace_symbol_runs(&s);
    }
    if !rules.stopword_list.is_empty() {
        s = s
            .split_word_bounds()
            .filter(|seg| !rules.stopword_list.contains(*seg))
            .collect();
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn replace_symbol_runs(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_run = false;
    for c in s.chars() {
        if c.is_alphanumeric() || c.is_whitespace() {
            out.push(c);
            in_run = false;
        } else if !in_run {
            out.push(' ');
            in_run = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_on() -> CleanRules {
        CleanRules::default()
    }

    fn all_off() -> CleanRules {
        CleanRules {
            strip_urls: false,
            strip_mentions: false,
            unwrap_hashtags: false,
            drop_digits: false,
            drop_symbols: false,
            stopword_list: BTreeSet::new(),
        }
    }

    #[test]
    fn hashtag_sample_sentence() {
        assert_eq!(
            clean_text("#BeijingReports7NewInfections# details at http://t.cn/x", &all_on()),
            "BeijingReportsNewInfections details at"
        );
    }

    #[test]
    fn empty_and_digits_only() {
        assert_eq!(clean_text("", &all_on()), "");
        let rules = CleanRules { drop_digits: true, ..all_off() };
        assert_eq!(clean_text("2022 0405", &rules), "");
    }

    #[test]
    fn individual_flags() {
        let text = "@xinhua reports #Shanghai# 994 cases! www.example.com/x";
        assert_eq!(
            clean_text(text, &CleanRules { strip_mentions: true, ..all_off() }),
            "reports #Shanghai# 994 cases! www.example.com/x"
        );
        assert_eq!(
            clean_text(text, &CleanRules { strip_urls: true, ..all_off() }),
            "@xinhua reports #Shanghai# 994 cases!"
        );
        assert_eq!(
            clean_text(text, &CleanRules { unwrap_hashtags: true, ..all_off() }),
            "@xinhua reports Shanghai 994 cases! www.example.com/x"
        );
        assert_eq!(
            clean_text("COVID-19, again!", &CleanRules { drop_symbols: true, ..all_off() }),
            "COVID 19 again"
        );
    }

    #[test]
    fn stopwords_at_token_granularity() {
        let rules = all_on().with_stopwords(["the", "at", "的"]);
        assert_eq!(clean_text("the theatre at noon", &rules), "theatre noon");
        // CJK: each ideograph is its own word segment
        assert_eq!(clean_text("上海的医院", &rules), "上海医院");
    }

    #[test]
    fn word_list_comments() {
        let words = parse_word_list("# header\nthe\n  a  # article\n\n的\n");
        assert_eq!(words, ["a", "the", "的"].into_iter().map(String::from).collect());
    }
}
