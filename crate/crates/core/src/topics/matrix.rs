use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean_text, tokenize, CleanRules, Corpus, UserLexicon};
use crate::scalar::Scalar;

use super::TopicsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorizerParams {
    pub weighting: Weighting,
    pub min_df: usize,
    pub max_df_ratio: f64,
}

impl Default for VectorizerParams {
    fn default() -> Self {
        VectorizerParams {
            weighting: Weighting::Tfidf,
            min_df: 1,
            max_df_ratio: 1.0,
        }
    }
}

/// Documents-by-terms matrix in compressed sparse row form. Only strictly
/// positive weights are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocMatrix<T> {
    pub vocab: Vec<String>,
    pub doc_ids: Vec<String>,
    pub weighting: Weighting,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    /// Rows left without any term after cleaning and df filtering.
    pub empty_docs: Vec<usize>,
}

/// Cleaned token stream per document, aligned with a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStreams {
    pub doc_ids: Vec<String>,
    pub streams: Vec<Vec<String>>,
}

impl TokenStreams {
    pub fn from_corpus(corpus: &Corpus, rules: &CleanRules, lexicon: Option<&UserLexicon>) -> Self {
        let streams = corpus
            .posts()
            .par_iter()
            .map(|p| tokenize(&clean_text(&p.text, rules), lexicon))
            .collect();
        TokenStreams {
            doc_ids: corpus.posts().iter().map(|p| p.id.clone()).collect(),
            streams,
        }
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }
}

pub fn build_matrix<T: Scalar>(
    corpus: &Corpus,
    rules: &CleanRules,
    lexicon: Option<&UserLexicon>,
    params: &VectorizerParams,
) -> Result<TermDocMatrix<T>, TopicsError> {
    let streams = TokenStreams::from_corpus(corpus, rules, lexicon);
    build_matrix_from_tokens(&streams, params)
}

/// Vectorizes pre-tokenized documents.
///
/// Terms whose document frequency lies outside
/// `[min_df, max_df_ratio * n_docs]` are dropped. Tf-idf uses the smoothed
/// idf `ln((1 + n) / (1 + df)) + 1` times the raw term count.
pub fn build_matrix_from_tokens<T: Scalar>(
    streams: &TokenStreams,
    params: &VectorizerParams,
) -> Result<TermDocMatrix<T>, TopicsError> {
    if params.min_df < 1 {
        return Err(TopicsError::InvalidParam("min_df must be >= 1".into()));
    }
    if !(params.max_df_ratio > 0.0 && params.max_df_ratio <= 1.0) {
        return Err(TopicsError::InvalidParam("max_df_ratio must lie in (0, 1]".into()));
    }
    let mut seen = BTreeSet::new();
    for id in &streams.doc_ids {
        if !seen.insert(id.as_str()) {
            return Err(TopicsError::InvalidParam(format!("duplicate doc id {id:?}")));
        }
    }
    if streams.streams.iter().all(Vec::is_empty) {
        return Err(TopicsError::EmptyCorpus);
    }

    let n_docs = streams.len();
    let counts: Vec<BTreeMap<&str, usize>> = streams
        .streams
        .iter()
        .map(|toks| {
            let mut m = BTreeMap::new();
            for t in toks {
                *m.entry(t.as_str()).or_insert(0) += 1;
            }
            m
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &counts {
        for term in doc.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let max_df = params.max_df_ratio * n_docs as f64;
    let vocab: Vec<String> = df
        .iter()
        .filter(|(_, &d)| d >= params.min_df && d as f64 <= max_df + 1e-9)
        .map(|(t, _)| t.to_string())
        .collect();
    let index: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let n = T::from_count(n_docs);
    let mut row_ptr = Vec::with_capacity(n_docs + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut empty_docs = Vec::new();
    row_ptr.push(0);
    for (d, doc) in counts.iter().enumerate() {
        // BTreeMap iteration is lexicographic, same as vocab order
        for (term, &tf) in doc {
            if let Some(&j) = index.get(term) {
                let tf = T::from_count(tf);
                let w = match params.weighting {
                    Weighting::Count => tf,
                    Weighting::Tfidf => {
                        let dfv = T::from_count(df[term]);
                        tf * (((T::one() + n) / (T::one() + dfv)).ln() + T::one())
                    }
                };
                if w > T::zero() {
                    col_idx.push(j);
                    values.push(w);
                }
            }
        }
        if row_ptr.last() == Some(&col_idx.len()) {
            empty_docs.push(d);
        }
        row_ptr.push(col_idx.len());
    }

    Ok(TermDocMatrix {
        vocab,
        doc_ids: streams.doc_ids.clone(),
        weighting: params.weighting,
        row_ptr,
        col_idx,
        values,
        empty_docs,
    })
}

impl<T: Scalar> TermDocMatrix<T> {
    /// Builds from dense rows; zeros are dropped. Vocab must be sorted and unique.
    pub fn from_dense(vocab: Vec<String>, doc_ids: Vec<String>, rows: &[Vec<T>], weighting: Weighting) -> Self {
        assert_eq!(rows.len(), doc_ids.len(), "row count must match doc ids");
        assert!(vocab.windows(2).all(|w| w[0] < w[1]), "vocab must be sorted and unique");
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut empty_docs = Vec::new();
        for (d, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), vocab.len(), "row width must match vocab");
            for (j, &v) in row.iter().enumerate() {
                assert!(v >= T::zero(), "weights must be nonnegative");
                if v > T::zero() {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            if *row_ptr.last().unwrap() == col_idx.len() {
                empty_docs.push(d);
            }
            row_ptr.push(col_idx.len());
        }
        TermDocMatrix {
            vocab,
            doc_ids,
            weighting,
            row_ptr,
            col_idx,
            values,
            empty_docs,
        }
    }

    /// Rebuilds from `(doc, term, weight)` entries sorted by doc then term.
    pub fn from_entries(
        vocab: Vec<String>,
        doc_ids: Vec<String>,
        weighting: Weighting,
        entries: &[(usize, usize, T)],
    ) -> Result<Self, TopicsError> {
        let n_docs = doc_ids.len();
        let mut row_ptr = vec![0usize; n_docs + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(d, j, w) in entries {
            if d >= n_docs || j >= vocab.len() || !(w > T::zero()) {
                return Err(TopicsError::Artifact(format!("bad matrix entry ({d}, {j})")));
            }
            if prev.is_some_and(|p| p >= (d, j)) {
                return Err(TopicsError::Artifact("matrix entries out of order".into()));
            }
            prev = Some((d, j));
            row_ptr[d + 1] += 1;
            col_idx.push(j);
            values.push(w);
        }
        for d in 0..n_docs {
            row_ptr[d + 1] += row_ptr[d];
        }
        let empty_docs = (0..n_docs).filter(|&d| row_ptr[d] == row_ptr[d + 1]).collect();
        Ok(TermDocMatrix {
            vocab,
            doc_ids,
            weighting,
            row_ptr,
            col_idx,
            values,
            empty_docs,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(term index, weight)` pairs of one document, ascending by term.
    pub fn row(&self, d: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[d]..self.row_ptr[d + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_docs()).flat_map(move |d| self.row(d).map(move |(j, w)| (d, j, w)))
    }

    pub fn get(&self, d: usize, term: &str) -> T {
        match self.vocab.binary_search_by(|v| v.as_str().cmp(term)) {
            Ok(j) => self.row(d).find(|&(c, _)| c == j).map(|(_, w)| w).unwrap_or_else(T::zero),
            Err(_) => T::zero(),
        }
    }

    pub fn total_weight(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn frobenius_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    /// Same structure with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = *v * c;
        }
        out
    }

    /// Column-major copy: for each term, `(doc, weight)` ascending by doc.
    pub(crate) fn transpose_lists(&self) -> Vec<Vec<(usize, T)>> {
        let mut cols = vec![Vec::new(); self.n_terms()];
        for (d, j, w) in self.entries() {
            cols[j].push((d, w));
        }
        cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn streams(docs: &[&str]) -> TokenStreams {
        TokenStreams {
            doc_ids: (0..docs.len()).map(|i| format!("d{i}")).collect(),
            streams: docs
                .iter()
                .map(|d| d.split_whitespace().map(String::from).collect())
                .collect(),
        }
    }

    fn params(weighting: Weighting, min_df: usize) -> VectorizerParams {
        VectorizerParams {
            weighting,
            min_df,
            max_df_ratio: 1.0,
        }
    }

    #[test]
    fn counts_two_docs() {
        let m: TermDocMatrix<f64> = build_matrix_from_tokens(&streams(&["a b", "b c"]), &params(Weighting::Count, 1)).unwrap();
        assert_eq!(m.vocab, ["a", "b", "c"]);
        let e: Vec<_> = m.entries().collect();
        assert_eq!(e, [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn min_df_filters() {
        let m: TermDocMatrix<f64> = build_matrix_from_tokens(&streams(&["a b", "b c"]), &params(Weighting::Count, 2)).unwrap();
        assert_eq!(m.vocab, ["b"]);
    }

    #[test]
    fn max_df_filters_and_flags_empty_rows() {
        let p = VectorizerParams {
            weighting: Weighting::Count,
            min_df: 1,
            max_df_ratio: 0.5,
        };
        let m: TermDocMatrix<f64> = build_matrix_from_tokens(&streams(&["a b", "b c"]), &p).unwrap();
        assert_eq!(m.vocab, ["a", "c"]);
        let m: TermDocMatrix<f64> = build_matrix_from_tokens(&streams(&["a b", "b", "a c"]), &p).unwrap();
        assert_eq!(m.vocab, ["c"]);
        assert_eq!(m.empty_docs, [0, 1]);
    }

    #[test]
    fn single_doc_tfidf_equals_tf() {
        let m: TermDocMatrix<f64> = build_matrix_from_tokens(&streams(&["x y x"]), &params(Weighting::Tfidf, 1)).unwrap();
        assert_eq!(m.get(0, "x"), 2.0);
        assert_eq!(m.get(0, "y"), 1.0);
    }

    #[test]
    fn tfidf_smoothing() {
        let m: TermDocMatrix<f64> = build_matrix_from_tokens(&streams(&["a b", "b c", "b"]), &params(Weighting::Tfidf, 1)).unwrap();
        let expected_a = (4.0f64 / 2.0).ln() + 1.0;
        assert!((m.get(0, "a") - expected_a).abs() < 1e-15);
        assert!((m.get(0, "b") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_empty_is_error() {
        assert!(matches!(
            build_matrix_from_tokens::<f64>(&streams(&["", ""]), &params(Weighting::Count, 1)),
            Err(TopicsError::EmptyCorpus)
        ));
    }

    #[test]
    fn entries_roundtrip() {
        let m: TermDocMatrix<f32> = build_matrix_from_tokens(&streams(&["a b a", "", "c"]), &params(Weighting::Tfidf, 1)).unwrap();
        let e: Vec<_> = m.entries().collect();
        let back = TermDocMatrix::from_entries(m.vocab.clone(), m.doc_ids.clone(), m.weighting, &e).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.empty_docs, [1]);
    }
}
