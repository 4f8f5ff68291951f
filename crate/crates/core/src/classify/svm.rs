//! Linear soft-margin SVM trained by dual coordinate descent.
//!
//! The bias is folded into the weights through a constant feature of 1, so
//! it is regularized together with `w`. Primal:
//! `½‖w̃‖² + C Σ max(0, 1 - yᵢ w̃ᵀx̃ᵢ)`; dual: `Σα - ½‖Σ αᵢyᵢx̃ᵢ‖²`, `0 ≤ α ≤ C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::select::LabeledFeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Penalty on hinge losses.
    pub c: f64,
    /// Stop once the duality gap is at most `tol · max(1, primal)`.
    pub tol: f64,
    /// Maximum number of full coordinate sweeps.
    pub max_sweeps: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub tol: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub sweeps: usize,
}

impl SvmModel {
    pub fn duality_gap(&self) -> f64 {
        self.primal_objective - self.dual_objective
    }

    /// `wᵀx + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.weights.len(), "sample has {} features, model expects {}", x.len(), self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.decision(x) > 0.0) as u8
    }
}

fn objectives(rows: &[Vec<f64>], y: &[f64], alpha: &[f64], w: &[f64], c: f64) -> (f64, f64) {
    let half_norm = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(y)
        .map(|(x, &yi)| (1.0 - yi * dot(w, x)).max(0.0))
        .sum();
    (half_norm + c * hinge, alpha.iter().sum::<f64>() - half_norm)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Label 1 maps to `+1`, label 0 to `-1`.
pub fn svm_train(data: &LabeledFeatureMatrix, cfg: &SvmConfig) -> Result<SvmModel> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) || !(cfg.tol > 0.0) || cfg.max_sweeps == 0 {
        return Err(Error::Config(format!("invalid SVM settings {cfg:?}")));
    }
    data.require_both_classes()?;
    let x = data.values();
    let (n, d) = (x.nrows(), x.ncols());
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| x.row(i).iter().copied().chain(std::iter::once(1.0)).collect())
        .collect();
    let y: Vec<f64> = data.labels().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let q: Vec<f64> = rows.iter().map(|r| dot(r, r)).collect();
    let c = cfg.c;
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d + 1];
    for sweep in 1..=cfg.max_sweeps {
        for i in 0..n {
            let g = y[i] * dot(&w, &rows[i]) - 1.0;
            let new = (alpha[i] - g / q[i]).clamp(0.0, c);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                for (wk, xk) in w.iter_mut().zip(&rows[i]) {
                    *wk += delta * y[i] * xk;
                }
            }
        }
        let (primal, dual) = objectives(&rows, &y, &alpha, &w, c);
        if primal - dual <= cfg.tol * primal.max(1.0) {
            let bias = w[d];
            w.truncate(d);
            return Ok(SvmModel {
                weights: w,
                bias,
                c,
                tol: cfg.tol,
                primal_objective: primal,
                dual_objective: dual,
                sweeps: sweep,
            });
        }
    }
    let (primal, dual) = objectives(&rows, &y, &alpha, &w, c);
    Err(Error::Convergence {
        iterations: cfg.max_sweeps,
        gap: primal - dual,
    })
}
