//! Filter feature selection.
//!
//! Univariate criteria score one feature at a time; multivariate criteria
//! score a whole subset and are driven by the greedy [`forward_select`].
//! Class 1 of the two-class formulas is label 0, class 2 is label 1.

mod forward;
mod mi;
mod multivariate;
mod univariate;

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::signal::Label;

pub use forward::{forward_select, SelectionTrace};
pub use mi::{default_bins, discretize, mutual_information};
pub use multivariate::{
    bhattacharyya_distance, chernoff_distance, mrmr_mid, regression_fit, regression_r2, scatter_ratio, subset_scorer,
    RegressionFit, SubsetScorer,
};
pub use univariate::{corr_score, fdr_score, mi_score, rank_univariate, ranksum_score, ranksum_statistic, FeatureScore};

/// Samples × features matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatureMatrix {
    values: DMatrix<f64>,
    labels: Vec<Label>,
    feature_names: Option<Vec<String>>,
}

impl LabeledFeatureMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if values.nrows() != labels.len() {
            return Err(Error::Data(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("label {l} is not binary")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value at row {}, column {}",
                i % values.nrows(),
                i / values.nrows()
            )));
        }
        Ok(Self {
            values,
            labels,
            feature_names: None,
        })
    }

    /// Builds a matrix from per-sample feature rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data("feature rows have different lengths".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]), labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::Data(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Matrix restricted to `columns`, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            values: self.values.select_columns(columns),
            labels: self.labels.clone(),
            feature_names: self
                .feature_names
                .as_ref()
                .map(|n| columns.iter().map(|&c| n[c].clone()).collect()),
        }
    }

    /// Matrix restricted to `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Row indices of class 0 and class 1.
    pub fn class_rows(&self) -> [Vec<usize>; 2] {
        class_rows(&self.labels)
    }

    pub(crate) fn require_both_classes(&self) -> Result<[Vec<usize>; 2]> {
        let rows = self.class_rows();
        if rows[0].is_empty() || rows[1].is_empty() {
            return Err(Error::Data("both classes must be present".into()));
        }
        Ok(rows)
    }
}

pub(crate) fn class_rows(labels: &[Label]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        out[l as usize].push(i);
    }
    out
}

/// Per-class Gaussian parameters and prior-weighted scatter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGaussianStats {
    pub means: [DVector<f64>; 2],
    /// Unbiased per-class covariances.
    pub covariances: [DMatrix<f64>; 2],
    pub priors: [f64; 2],
    pub global_mean: DVector<f64>,
    /// `Σ P_i E[(x - μ_i)(x - μ_i)ᵀ]` with maximum-likelihood class expectations.
    pub within_scatter: DMatrix<f64>,
    /// `Σ P_i (μ_i - μ_0)(μ_i - μ_0)ᵀ`.
    pub between_scatter: DMatrix<f64>,
}

impl ClassGaussianStats {
    pub fn estimate(matrix: &LabeledFeatureMatrix) -> Result<Self> {
        let rows = matrix.require_both_classes()?;
        let x = matrix.values();
        let n = matrix.n_samples() as f64;
        let all: Vec<usize> = (0..matrix.n_samples()).collect();
        let global_mean = linalg::column_means(x, &all);
        let means = [linalg::column_means(x, &rows[0]), linalg::column_means(x, &rows[1])];
        let covariances = [
            linalg::covariance(x, &rows[0], &means[0]),
            linalg::covariance(x, &rows[1], &means[1]),
        ];
        let priors = [rows[0].len() as f64 / n, rows[1].len() as f64 / n];
        let d = matrix.n_features();
        let mut within_scatter = DMatrix::zeros(d, d);
        let mut between_scatter = DMatrix::zeros(d, d);
        for c in 0..2 {
            let nc = rows[c].len() as f64;
            let ml = &covariances[c] * ((nc - 1.0).max(0.0) / nc);
            within_scatter += ml * priors[c];
            let diff = &means[c] - &global_mean;
            between_scatter += &diff * diff.transpose() * priors[c];
        }
        Ok(Self {
            means,
            covariances,
            priors,
            global_mean,
            within_scatter,
            between_scatter,
        })
    }
}

/// Feature-selection criterion with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "lowercase")]
pub enum Criterion {
    /// Absolute Pearson correlation with the labels.
    Corr,
    /// Binned mutual information with the labels; `None` picks `ceil(sqrt(n))` capped at 32.
    Mi { bins: Option<usize> },
    /// Fisher discriminant ratio.
    Fdr,
    /// Wilcoxon rank-sum relevance.
    Ranksum,
    /// R² of a linear regression of the labels on the subset.
    Lr,
    /// Gaussian Bhattacharyya distance.
    Bd,
    /// Gaussian Chernoff distance with weight `beta`.
    Chernoff { beta: f64 },
    /// Trace ratio of between- to within-class scatter.
    Sr,
    /// Mean relevance minus mean redundancy (MID form).
    Mrmr {
        bins: Option<usize>,
        #[serde(default)]
        exclude_self_redundancy: bool,
    },
}

impl Criterion {
    pub fn is_univariate(&self) -> bool {
        matches!(self, Criterion::Corr | Criterion::Mi { .. } | Criterion::Fdr | Criterion::Ranksum)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Corr => "CORR",
            Criterion::Mi { .. } => "MI",
            Criterion::Fdr => "FDR",
            Criterion::Ranksum => "RANKSUM",
            Criterion::Lr => "LR",
            Criterion::Bd => "BD",
            Criterion::Chernoff { .. } => "CHERNOFF",
            Criterion::Sr => "SR",
            Criterion::Mrmr { .. } => "mRMR",
        }
    }

    /// Parses the short names used in configuration files (case-insensitive).
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "corr" => Criterion::Corr,
            "mi" => Criterion::Mi { bins: None },
            "fdr" => Criterion::Fdr,
            "ranksum" => Criterion::Ranksum,
            "lr" => Criterion::Lr,
            "bd" => Criterion::Bd,
            "sr" => Criterion::Sr,
            "mrmr" => Criterion::Mrmr {
                bins: None,
                exclude_self_redundancy: false,
            },
            other => return Err(Error::Config(format!("unknown selection criterion {other:?}"))),
        })
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl SelectionTrace {
    /// Writes `step,feature_index,criterion_value` rows with a header (steps start at 1).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,feature_index,criterion_value")?;
        for (i, (f, s)) in self.indices.iter().zip(&self.scores).enumerate() {
            writeln!(out, "{},{f},{s}", i + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_stats_invariants() {
        let x = DMatrix::from_fn(12, 3, |i, j| ((i * 5 + j * 11) % 7) as f64 + 0.1 * (i as f64).cos());
        let labels = (0..12).map(|i| (i % 3 == 0) as u8).collect();
        let m = LabeledFeatureMatrix::new(x, labels).unwrap();
        let s = ClassGaussianStats::estimate(&m).unwrap();
        assert!((s.priors[0] + s.priors[1] - 1.0).abs() < 1e-15);
        for mat in [&s.covariances[0], &s.covariances[1], &s.within_scatter, &s.between_scatter] {
            assert!((mat - mat.transpose()).abs().max() < 1e-12);
            let eig = mat.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&v| v > -1e-10));
        }
    }

    #[test]
    fn rejects_bad_labels_and_values() {
        let x = DMatrix::from_element(2, 1, 1.0);
        assert!(LabeledFeatureMatrix::new(x.clone(), vec![0, 2]).is_err());
        assert!(LabeledFeatureMatrix::new(x.clone(), vec![0]).is_err());
        let mut bad = x;
        bad[(1, 0)] = f64::INFINITY;
        assert!(LabeledFeatureMatrix::new(bad, vec![0, 1]).is_err());
    }

    #[test]
    fn criterion_names_round_trip() {
        for n in ["corr", "mi", "fdr", "ranksum", "lr", "bd", "sr", "mrmr"] {
            let c = Criterion::from_name(n).unwrap();
            assert_eq!(c.name().to_ascii_lowercase(), n);
        }
        assert!(Criterion::from_name("wrapper").is_err());
    }
}
