//! Term-document matrices, NMF topic models, C_V coherence, K sweeps and
//! topic-based corpus subsetting.

mod artifact;
mod coherence;
mod dense;
mod matrix;
mod nmf;
mod sweep;

pub use artifact::{
    read_array, read_matrix, read_model, write_array, write_matrix, write_model, ARRAY_MAGIC,
};
pub use coherence::{coherence_cv, count_windows, cv_scores, npmi, CoherenceParams, CoherenceReport, WindowCounts, NPMI_EPS};
pub use dense::Dense;
pub use matrix::{build_matrix, build_matrix_from_tokens, TermDocMatrix, TokenStreams, VectorizerParams, Weighting};
pub use nmf::{fit_nmf, fit_nmf_observed, NmfModel, NmfParams, UPDATE_EPS};
pub use sweep::{sweep_k, SweepEntry, SweepResult};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum TopicsError {
    #[error("every document is empty after cleaning")]
    EmptyCorpus,
    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("matrix has zero total weight")]
    ZeroMatrix,
    #[error("topic {topic} out of range for k = {k}")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("fit failed at k = {k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<TopicsError>,
    },
    #[error("post {0:?} is not a row of the model")]
    UnknownDoc(String),
    #[error("artifact: {0}")]
    Artifact(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Highest-weighted terms of one topic, descending; ties in lexicographic
/// order. Zero-weight terms are never returned.
pub fn top_terms<T: Scalar>(model: &NmfModel<T>, topic: usize, n: usize) -> Result<Vec<(String, T)>, TopicsError> {
    if topic >= model.k {
        return Err(TopicsError::TopicOutOfRange { topic, k: model.k });
    }
    if n == 0 {
        return Err(TopicsError::InvalidParam("n must be >= 1".into()));
    }
    let mut terms: Vec<(usize, T)> = model
        .topic_term
        .row(topic)
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w > T::zero())
        .collect();
    // vocab is sorted, so index order is lexicographic order
    terms.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite weights").then(a.0.cmp(&b.0)));
    terms.truncate(n);
    Ok(terms
        .into_iter()
        .map(|(j, w)| (model.vocab[j].clone(), w))
        .collect())
}

/// Renders `[('USA', 16.22), ('Russia', 15.8)]`-style keyword lists.
pub fn render_terms<T: Scalar>(terms: &[(String, T)]) -> String {
    let items: Vec<String> = terms
        .iter()
        .map(|(t, w)| {
            let v = (w.to_f64().unwrap_or(0.0) * 100.0).round() / 100.0;
            format!("('{t}', {v})")
        })
        .collect();
    format!("[{}]", items.join(", "))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub topic: usize,
    pub considered: usize,
    pub kept: usize,
    /// Posts whose W row is entirely zero; never assigned.
    pub zero_rows: Vec<String>,
}

/// Keeps documents whose dominant topic is `topic` with share at least
/// `min_share`, where share is `W[d, topic] / Σ_t W[d, t]`.
pub fn assign_and_subset<T: Scalar>(
    model: &NmfModel<T>,
    corpus: &Corpus,
    topic: usize,
    min_share: f64,
) -> Result<(Corpus, SubsetReport), TopicsError> {
    if topic >= model.k {
        return Err(TopicsError::TopicOutOfRange { topic, k: model.k });
    }
    if !(0.0..=1.0).contains(&min_share) {
        return Err(TopicsError::InvalidParam("min_share must lie in [0, 1]".into()));
    }
    let rows: HashMap<&str, usize> = model.doc_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    for p in corpus.posts() {
        if !rows.contains_key(p.id.as_str()) {
            return Err(TopicsError::UnknownDoc(p.id.clone()));
        }
    }
    let dominant = model.dominant_topics();
    let min_share = T::lit(min_share);
    let mut report = SubsetReport {
        topic,
        considered: corpus.len(),
        ..Default::default()
    };
    let mut keep = std::collections::HashSet::new();
    for p in corpus.posts() {
        let d = rows[p.id.as_str()];
        match dominant[d] {
            None => report.zero_rows.push(p.id.clone()),
            Some(t) if t == topic => {
                let row = model.doc_topic.row(d);
                let total: T = row.iter().copied().sum();
                if row[topic] / total >= min_share {
                    keep.insert(p.id.as_str());
                }
            }
            Some(_) => {}
        }
    }
    let out = corpus.retain_by(format!("{} | topic {topic}", corpus.provenance), |p| keep.contains(p.id.as_str()));
    report.kept = out.len();
    Ok((out, report))
}

/// Topic whose H row gives `term` the largest weight; ties to the smaller index.
pub fn topic_for_term<T: Scalar>(model: &NmfModel<T>, term: &str) -> Option<usize> {
    let j = model.vocab.binary_search_by(|v| v.as_str().cmp(term)).ok()?;
    let mut best: Option<(usize, T)> = None;
    for t in 0..model.k {
        let v = model.topic_term.get(t, j);
        if v > T::zero() && best.map_or(true, |(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
}
