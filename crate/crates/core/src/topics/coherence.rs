//! C_V topic coherence: boolean sliding-window probabilities, NPMI context
//! vectors over a topic's top terms, cosine against the summed vector.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::matrix::TokenStreams;
use super::nmf::NmfModel;
use super::{top_terms, TopicsError};

/// Smoothing added to the joint probability inside NPMI.
pub const NPMI_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceParams {
    pub top_n: usize,
    pub window: usize,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        CoherenceParams { top_n: 10, window: 110 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport<T> {
    pub per_topic: Vec<T>,
    pub mean: T,
    pub top_n: usize,
    pub window: usize,
    /// Topics with fewer than `top_n` positive-weight terms.
    pub flagged: Vec<usize>,
}

/// Window occurrence counts for a fixed set of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCounts {
    pub total_windows: u64,
    pub single: Vec<u64>,
    pub pair: HashMap<(u32, u32), u64>,
}

impl WindowCounts {
    fn empty(n: usize) -> Self {
        WindowCounts {
            total_windows: 0,
            single: vec![0; n],
            pair: HashMap::new(),
        }
    }

    fn merge(mut self, other: WindowCounts) -> Self {
        self.total_windows += other.total_windows;
        for (a, b) in self.single.iter_mut().zip(other.single) {
            *a += b;
        }
        for (k, v) in other.pair {
            *self.pair.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn pair_count(&self, a: u32, b: u32) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pair.get(&key).copied().unwrap_or(0)
    }
}

/// Counts, for every term in `terms`, the windows containing it, and for
/// every pair the windows containing both.
///
/// A document of length `L <= window` forms a single window; longer
/// documents yield `L - window + 1` windows of exactly `window` tokens.
pub fn count_windows(streams: &TokenStreams, terms: &[String], window: usize) -> WindowCounts {
    let ids: HashMap<&str, u32> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    let n = terms.len();
    streams
        .streams
        .par_iter()
        .fold(
            || WindowCounts::empty(n),
            |mut acc, doc| {
                count_doc(doc, &ids, window, &mut acc);
                acc
            },
        )
        .reduce(|| WindowCounts::empty(n), WindowCounts::merge)
}

fn count_doc(doc: &[String], ids: &HashMap<&str, u32>, window: usize, acc: &mut WindowCounts) {
    if doc.is_empty() {
        return;
    }
    let mapped: Vec<Option<u32>> = doc.iter().map(|t| ids.get(t.as_str()).copied()).collect();
    let width = window.min(mapped.len());
    let n_windows = mapped.len() - width + 1;
    let mut in_window: HashMap<u32, usize> = HashMap::new();
    for id in mapped[..width].iter().flatten() {
        *in_window.entry(*id).or_insert(0) += 1;
    }
    for start in 0..n_windows {
        if start > 0 {
            if let Some(out) = mapped[start - 1] {
                let c = in_window.get_mut(&out).expect("leaving token was counted");
                *c -= 1;
                if *c == 0 {
                    in_window.remove(&out);
                }
            }
            if let Some(inc) = mapped[start + width - 1] {
                *in_window.entry(inc).or_insert(0) += 1;
            }
        }
        acc.total_windows += 1;
        let mut present: Vec<u32> = in_window.keys().copied().collect();
        present.sort_unstable();
        for (i, &a) in present.iter().enumerate() {
            acc.single[a as usize] += 1;
            for &b in &present[i + 1..] {
                *acc.pair.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
}

/// NPMI from window probabilities.
///
/// Pairs whose marginal product is zero never co-occur and score −1; a joint
/// probability of one is perfect association and scores 1. Otherwise
/// `ln((p_ab + ε) / (p_a p_b)) / −ln(p_ab + ε)`, clamped to [−1, 1].
pub fn npmi<T: Scalar>(p_ab: T, p_a: T, p_b: T) -> T {
    let eps = T::lit(NPMI_EPS);
    let joint = p_ab + eps;
    if !(p_a * p_b > T::zero()) {
        return -T::one();
    }
    let denom = -joint.ln();
    if !(denom > T::zero()) {
        return T::one();
    }
    ((joint / (p_a * p_b)).ln() / denom).max(-T::one()).min(T::one())
}

fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    if na > T::zero() && nb > T::zero() {
        (dot / (na * nb)).max(-T::one()).min(T::one())
    } else {
        T::zero()
    }
}

/// C_V score of each term list against the token streams.
pub fn cv_scores<T: Scalar>(topics: &[Vec<String>], streams: &TokenStreams, window: usize) -> Result<Vec<T>, TopicsError> {
    if window < 2 {
        return Err(TopicsError::InvalidParam("window must be >= 2".into()));
    }
    if streams.streams.iter().all(Vec::is_empty) {
        return Err(TopicsError::EmptyCorpus);
    }
    let mut union: Vec<String> = topics.iter().flatten().cloned().collect();
    union.sort();
    union.dedup();
    let counts = count_windows(streams, &union, window);
    let id = |t: &str| union.binary_search_by(|u| u.as_str().cmp(t)).expect("term in union") as u32;
    let total = T::lit(counts.total_windows as f64);
    let prob = |c: u64| T::lit(c as f64) / total;

    Ok(topics
        .iter()
        .map(|terms| {
            if terms.is_empty() {
                return T::zero();
            }
            let ids: Vec<u32> = terms.iter().map(|t| id(t)).collect();
            let vectors: Vec<Vec<T>> = ids
                .iter()
                .map(|&a| {
                    ids.iter()
                        .map(|&b| {
                            if a == b {
                                T::one()
                            } else {
                                npmi(
                                    prob(counts.pair_count(a, b)),
                                    prob(counts.single[a as usize]),
                                    prob(counts.single[b as usize]),
                                )
                            }
                        })
                        .collect()
                })
                .collect();
            let mut set = vec![T::zero(); ids.len()];
            for v in &vectors {
                for (s, &x) in set.iter_mut().zip(v) {
                    *s = *s + x;
                }
            }
            let sum: T = vectors.iter().map(|v| cosine(v, &set)).sum();
            sum / T::from_count(vectors.len())
        })
        .collect())
}

pub fn coherence_cv<T: Scalar>(
    model: &NmfModel<T>,
    streams: &TokenStreams,
    params: &CoherenceParams,
) -> Result<CoherenceReport<T>, TopicsError> {
    if params.top_n < 2 {
        return Err(TopicsError::InvalidParam("top_n must be >= 2".into()));
    }
    let mut flagged = Vec::new();
    let mut topics = Vec::with_capacity(model.k);
    for t in 0..model.k {
        let terms: Vec<String> = top_terms(model, t, params.top_n)?.into_iter().map(|(w, _)| w).collect();
        if terms.len() < params.top_n {
            flagged.push(t);
        }
        topics.push(terms);
    }
    let per_topic = cv_scores::<T>(&topics, streams, params.window)?;
    let mean = per_topic.iter().copied().sum::<T>() / T::from_count(per_topic.len());
    Ok(CoherenceReport {
        per_topic,
        mean,
        top_n: params.top_n,
        window: params.window,
        flagged,
    })
}
