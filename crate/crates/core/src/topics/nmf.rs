//! Lee–Seung multiplicative updates for `min ‖A − WH‖²_F` with `W, H ≥ 0`.
//!
//! Every parallel loop writes disjoint output cells and accumulates each cell
//! sequentially in a fixed index order, so results are bitwise identical for
//! any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::dense::Dense;
use super::matrix::TermDocMatrix;
use super::TopicsError;

/// Denominator guard for the multiplicative updates.
pub const UPDATE_EPS: f64 = 1e-12;

/// Above this many `docs * terms * k` cells the loss uses the trace
/// expansion instead of the exact residual sum.
const EXACT_LOSS_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmfParams {
    pub max_iter: usize,
    /// Stop once `|Δloss| <= tol * previous loss`.
    pub tol: f64,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams {
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfModel<T> {
    pub k: usize,
    /// W, documents × k.
    pub doc_topic: Dense<T>,
    /// H, k × terms.
    pub topic_term: Dense<T>,
    /// Objective after initialization, then after each iteration.
    pub loss_history: Vec<T>,
    pub seed: u64,
    pub iterations_run: usize,
    pub vocab: Vec<String>,
    pub doc_ids: Vec<String>,
}

impl<T: Scalar> NmfModel<T> {
    pub fn final_loss(&self) -> T {
        *self.loss_history.last().expect("loss history is never empty")
    }

    /// Index of the largest W entry per document; `None` for all-zero rows.
    /// Ties go to the smaller topic index.
    pub fn dominant_topics(&self) -> Vec<Option<usize>> {
        self.doc_topic
            .iter_rows()
            .map(|row| {
                let mut best: Option<(usize, T)> = None;
                for (t, &v) in row.iter().enumerate() {
                    if v > T::zero() && best.map_or(true, |(_, b)| v > b) {
                        best = Some((t, v));
                    }
                }
                best.map(|(t, _)| t)
            })
            .collect()
    }
}

pub fn fit_nmf<T: Scalar>(
    matrix: &TermDocMatrix<T>,
    k: usize,
    seed: u64,
    params: &NmfParams,
) -> Result<NmfModel<T>, TopicsError> {
    fit_nmf_observed(matrix, k, seed, params, |_, _, _, _| {})
}

/// Like [`fit_nmf`], calling `observe(iteration, W, H, loss)` after every
/// update step.
pub fn fit_nmf_observed<T: Scalar>(
    matrix: &TermDocMatrix<T>,
    k: usize,
    seed: u64,
    params: &NmfParams,
    mut observe: impl FnMut(usize, &Dense<T>, &Dense<T>, T),
) -> Result<NmfModel<T>, TopicsError> {
    let n_docs = matrix.n_docs();
    let n_terms = matrix.n_terms();
    if k == 0 || k > n_docs.min(n_terms) {
        return Err(TopicsError::KOutOfRange {
            k,
            max: n_docs.min(n_terms),
        });
    }
    if params.max_iter == 0 {
        return Err(TopicsError::InvalidParam("max_iter must be >= 1".into()));
    }
    if !(params.tol >= 0.0) {
        return Err(TopicsError::InvalidParam("tol must be >= 0".into()));
    }
    let total = matrix.total_weight();
    if !(total > T::zero()) {
        return Err(TopicsError::ZeroMatrix);
    }

    let (mut w, mut h) = initialize(total, n_docs, n_terms, k, seed);
    let cols = matrix.transpose_lists();
    let a_norm = matrix.frobenius_sq();
    let exact = n_docs.saturating_mul(n_terms).saturating_mul(k) <= EXACT_LOSS_CELLS;
    let eps = T::lit(UPDATE_EPS);
    let tol = T::lit(params.tol);

    let initial = if exact {
        exact_loss(matrix, &w, &h)
    } else {
        expanded_loss(a_norm, &w, &a_times_ht(matrix, &h), &gram_rows(&h))
    };
    let mut loss_history = vec![initial];
    let mut iterations_run = 0;

    for it in 0..params.max_iter {
        // H ← H ∘ (WᵀA) / (WᵀW H + ε)
        let wta = wt_times_a(&cols, &w, k);
        let wtw = gram_cols(&w);
        let den_h = wtw.matmul(&h);
        h.as_mut_slice()
            .par_chunks_mut(n_terms)
            .enumerate()
            .for_each(|(t, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = *v * (wta[j * k + t] / (den_h.get(t, j) + eps));
                }
            });

        // W ← W ∘ (AHᵀ) / (W HHᵀ + ε)
        let aht = a_times_ht(matrix, &h);
        let hht = gram_rows(&h);
        let den_w = w.matmul(&hht);
        w.as_mut_slice()
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(d, row)| {
                for (t, v) in row.iter_mut().enumerate() {
                    *v = *v * (aht.get(d, t) / (den_w.get(d, t) + eps));
                }
            });

        let loss = if exact {
            exact_loss(matrix, &w, &h)
        } else {
            expanded_loss(a_norm, &w, &aht, &hht)
        };
        observe(it, &w, &h, loss);
        let prev = *loss_history.last().unwrap();
        loss_history.push(loss);
        iterations_run = it + 1;
        if (prev - loss).abs() <= tol * prev {
            break;
        }
    }

    Ok(NmfModel {
        k,
        doc_topic: w,
        topic_term: h,
        loss_history,
        seed,
        iterations_run,
        vocab: matrix.vocab.clone(),
        doc_ids: matrix.doc_ids.clone(),
    })
}

/// Seeded uniform (0, 1] entries scaled by `sqrt(mean(A) / k)`; W is drawn
/// first, row-major, then H.
fn initialize<T: Scalar>(total: T, n_docs: usize, n_terms: usize, k: usize, seed: u64) -> (Dense<T>, Dense<T>) {
    let mean = total / (T::from_count(n_docs) * T::from_count(n_terms));
    let scale = (mean / T::from_count(k)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<T> {
        (0..n)
            .map(|_| T::lit(1.0 - rng.gen::<f64>()) * scale)
            .collect()
    };
    let w = Dense::from_vec(n_docs, k, draw(n_docs * k));
    let h = Dense::from_vec(k, n_terms, draw(k * n_terms));
    (w, h)
}

/// `WᵀA` stored term-major: entry `(j, t)` at `j * k + t`.
fn wt_times_a<T: Scalar>(cols: &[Vec<(usize, T)>], w: &Dense<T>, k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); cols.len() * k];
    out.par_chunks_mut(k).zip(cols.par_iter()).for_each(|(acc, col)| {
        for &(d, a) in col {
            let wrow = w.row(d);
            for t in 0..k {
                acc[t] = acc[t] + wrow[t] * a;
            }
        }
    });
    out
}

/// `A Hᵀ`, documents × k.
fn a_times_ht<T: Scalar>(matrix: &TermDocMatrix<T>, h: &Dense<T>) -> Dense<T> {
    let k = h.rows();
    let mut out = Dense::zeros(matrix.n_docs(), k);
    out.as_mut_slice()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(d, acc)| {
            for (j, a) in matrix.row(d) {
                for t in 0..k {
                    acc[t] = acc[t] + a * h.get(t, j);
                }
            }
        });
    out
}

/// `WᵀW`, k × k.
fn gram_cols<T: Scalar>(w: &Dense<T>) -> Dense<T> {
    let k = w.cols();
    let mut out = Dense::zeros(k, k);
    out.as_mut_slice()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(t, acc)| {
            for row in w.iter_rows() {
                for s in 0..k {
                    acc[s] = acc[s] + row[t] * row[s];
                }
            }
        });
    out
}

/// `HHᵀ`, k × k.
fn gram_rows<T: Scalar>(h: &Dense<T>) -> Dense<T> {
    let k = h.rows();
    let mut out = Dense::zeros(k, k);
    out.as_mut_slice()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(t, acc)| {
            let ht = h.row(t);
            for s in 0..k {
                let hs = h.row(s);
                let mut sum = T::zero();
                for j in 0..ht.len() {
                    sum = sum + ht[j] * hs[j];
                }
                acc[s] = sum;
            }
        });
    out
}

/// `Σ (A − WH)²` over every cell.
fn exact_loss<T: Scalar>(matrix: &TermDocMatrix<T>, w: &Dense<T>, h: &Dense<T>) -> T {
    let n_terms = matrix.n_terms();
    let k = w.cols();
    let per_doc: Vec<T> = (0..matrix.n_docs())
        .into_par_iter()
        .map(|d| {
            let wrow = w.row(d);
            let mut dense_a = vec![T::zero(); n_terms];
            for (j, a) in matrix.row(d) {
                dense_a[j] = a;
            }
            let mut sum = T::zero();
            for (j, &a) in dense_a.iter().enumerate() {
                let mut wh = T::zero();
                for t in 0..k {
                    wh = wh + wrow[t] * h.get(t, j);
                }
                let r = a - wh;
                sum = sum + r * r;
            }
            sum
        })
        .collect();
    per_doc.into_iter().fold(T::zero(), |a, b| a + b)
}

/// `‖A‖² − 2 tr(Wᵀ A Hᵀ) + tr(WᵀW HHᵀ)`, clamped at zero.
fn expanded_loss<T: Scalar>(a_norm: T, w: &Dense<T>, aht: &Dense<T>, hht: &Dense<T>) -> T {
    let cross = w
        .as_slice()
        .iter()
        .zip(aht.as_slice())
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let wtw = gram_cols(w);
    let quad = wtw
        .as_slice()
        .iter()
        .zip(hht.as_slice())
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    (a_norm - (cross + cross) + quad).max(T::zero())
}
