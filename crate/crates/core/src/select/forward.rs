use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multivariate::subset_scorer;
use super::univariate::rank_univariate;
use super::{Criterion, LabeledFeatureMatrix};
use crate::error::{Error, Result};

/// Ordered feature subset produced by forward selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub criterion: String,
    /// Selected features in the order they were added.
    pub indices: Vec<usize>,
    /// Criterion value after each addition (the ranking score in univariate mode).
    pub scores: Vec<f64>,
}

impl SelectionTrace {
    /// The first `k` selected features.
    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.indices[..k.min(self.indices.len())]
    }
}

const TIE_RTOL: f64 = 1e-12;

/// Selects up to `cap` features.
///
/// Univariate criteria return the top of the ranking. Subset criteria grow
/// the subset greedily, adding at each step the candidate that maximises the
/// criterion on the current subset plus the candidate. Scores within a
/// relative `1e-12` of each other count as tied and go to the lower index, so
/// rounding noise cannot break an exact tie. Candidates whose evaluation
/// fails are skipped.
pub fn forward_select(matrix: &LabeledFeatureMatrix, criterion: &Criterion, cap: usize) -> Result<SelectionTrace> {
    if cap == 0 {
        return Err(Error::Config("cap must be at least 1".into()));
    }
    if criterion.is_univariate() {
        let ranked = rank_univariate(matrix, criterion, cap)?;
        return Ok(SelectionTrace {
            criterion: criterion.name().into(),
            indices: ranked.iter().map(|s| s.feature_index).collect(),
            scores: ranked.iter().map(|s| s.score).collect(),
        });
    }
    let scorer = subset_scorer(matrix, criterion)?;
    let d = matrix.n_features();
    let target = cap.min(d);
    let mut selected: Vec<usize> = Vec::with_capacity(target);
    let mut in_set = vec![false; d];
    let mut scores = Vec::with_capacity(target);
    while selected.len() < target {
        let candidates: Vec<usize> = (0..d).filter(|&j| !in_set[j]).collect();
        let results: Vec<(usize, Result<f64>)> = candidates
            .par_iter()
            .map(|&j| {
                let mut subset = selected.clone();
                subset.push(j);
                (j, scorer.score(&subset))
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        let mut last_error = None;
        for (j, r) in results {
            match r {
                Ok(v) if v.is_finite() => {
                    if best.is_none_or(|(_, b)| v - b > TIE_RTOL * v.abs().max(b.abs())) {
                        best = Some((j, v));
                    }
                }
                Ok(v) => log::warn!("{criterion}: candidate {j} gave non-finite value {v}; skipped"),
                Err(e) => {
                    log::warn!("{criterion}: candidate {j} failed at step {}: {e}", selected.len() + 1);
                    last_error = Some(e);
                }
            }
        }
        let Some((j, v)) = best else {
            let step = selected.len() + 1;
            return Err(match last_error {
                Some(e) => e.context(format!("{criterion}: every candidate failed at step {step}")),
                None => Error::Numeric(format!("{criterion}: no finite candidate at step {step}")),
            });
        };
        selected.push(j);
        in_set[j] = true;
        scores.push(v);
    }
    Ok(SelectionTrace {
        criterion: criterion.name().into(),
        indices: selected,
        scores,
    })
}
