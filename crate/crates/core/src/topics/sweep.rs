use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::coherence::{coherence_cv, CoherenceParams, CoherenceReport};
use super::matrix::{TermDocMatrix, TokenStreams};
use super::nmf::{fit_nmf, NmfModel, NmfParams};
use super::TopicsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry<T> {
    pub k: usize,
    pub mean_coherence: T,
    pub coherence: CoherenceReport<T>,
    pub model: NmfModel<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub entries: Vec<SweepEntry<T>>,
    pub selected_k: usize,
    /// Set when `selected_k` was chosen by hand instead of by coherence.
    pub overridden: bool,
}

impl<T: Scalar> SweepResult<T> {
    pub fn entry(&self, k: usize) -> Option<&SweepEntry<T>> {
        self.entries.iter().find(|e| e.k == k)
    }

    pub fn selected(&self) -> &SweepEntry<T> {
        self.entry(self.selected_k).expect("selected k is always swept")
    }

    /// Replaces the coherence-based choice, e.g. after reading the topics.
    pub fn override_k(&mut self, k: usize) -> Result<(), TopicsError> {
        if self.entry(k).is_none() {
            return Err(TopicsError::InvalidParam(format!("k = {k} was not part of the sweep")));
        }
        self.selected_k = k;
        self.overridden = true;
        Ok(())
    }

    /// `k,mean_coherence` CSV of the whole curve.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("k,mean_coherence\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.k, e.mean_coherence));
        }
        out
    }
}

/// Fits one model per K in `k_min..=k_max` and picks the K with the highest
/// mean coherence (ties to the smaller K). Fits run in parallel.
pub fn sweep_k<T: Scalar>(
    matrix: &TermDocMatrix<T>,
    streams: &TokenStreams,
    k_min: usize,
    k_max: usize,
    seed: u64,
    nmf: &NmfParams,
    coherence: &CoherenceParams,
) -> Result<SweepResult<T>, TopicsError> {
    if k_min < 1 || k_min > k_max {
        return Err(TopicsError::InvalidParam(format!("bad K range {k_min}..={k_max}")));
    }
    let results: Vec<Result<SweepEntry<T>, TopicsError>> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let wrap = |source| TopicsError::AtK {
                k,
                source: Box::new(source),
            };
            let model = fit_nmf(matrix, k, seed, nmf).map_err(wrap)?;
            let report = coherence_cv(&model, streams, coherence).map_err(wrap)?;
            Ok(SweepEntry {
                k,
                mean_coherence: report.mean,
                coherence: report,
                model,
            })
        })
        .collect();
    // first failing K in range order, independent of scheduling
    let entries = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut best = &entries[0];
    for e in &entries[1..] {
        if e.mean_coherence > best.mean_coherence {
            best = e;
        }
    }
    let selected_k = best.k;
    Ok(SweepResult {
        entries,
        selected_k,
        overridden: false,
    })
}
