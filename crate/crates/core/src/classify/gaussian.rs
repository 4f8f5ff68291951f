//! Gaussian discriminant classifiers with ridge-regularized covariances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, SpdFactor};
use crate::select::LabeledFeatureMatrix;

struct ClassMoments {
    means: [DVector<f64>; 2],
    covariances: [DMatrix<f64>; 2],
    priors: [f64; 2],
}

fn class_moments(data: &LabeledFeatureMatrix) -> Result<ClassMoments> {
    let rows = data.require_both_classes()?;
    if rows.iter().any(|r| r.len() < 2) {
        return Err(Error::Data("each class needs at least two training samples".into()));
    }
    let x = data.values();
    let n = data.n_samples() as f64;
    let means = [linalg::column_means(x, &rows[0]), linalg::column_means(x, &rows[1])];
    let covariances = [
        linalg::covariance(x, &rows[0], &means[0]),
        linalg::covariance(x, &rows[1], &means[1]),
    ];
    Ok(ClassMoments {
        means,
        covariances,
        priors: [rows[0].len() as f64 / n, rows[1].len() as f64 / n],
    })
}

fn check_dim(x: &[f64], d: usize) {
    assert_eq!(x.len(), d, "sample has {} features, model expects {d}", x.len());
}

/// Linear discriminant with a shared covariance.
#[derive(Debug, Clone)]
pub struct LdaModel {
    pub means: [DVector<f64>; 2],
    pub priors: [f64; 2],
    /// `Σ⁻¹(μ₁ - μ₀)`.
    pub weights: DVector<f64>,
    pub bias: f64,
}

/// Fits LDA with the prior-weighted pooled covariance plus the relative ridge.
pub fn lda_train(data: &LabeledFeatureMatrix) -> Result<LdaModel> {
    let m = class_moments(data)?;
    let mut pooled = &m.covariances[0] * m.priors[0] + &m.covariances[1] * m.priors[1];
    linalg::regularize(&mut pooled);
    let factor = SpdFactor::new(pooled, "pooled covariance")?;
    let weights = factor.solve(&(&m.means[1] - &m.means[0]));
    let bias = -0.5 * (&m.means[1] + &m.means[0]).dot(&weights) + (m.priors[1] / m.priors[0]).ln();
    if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("LDA discriminant is not finite".into()));
    }
    Ok(LdaModel {
        means: m.means,
        priors: m.priors,
        weights,
        bias,
    })
}

impl LdaModel {
    /// `wᵀx + b`, the log-odds of class 1 under the fitted model.
    pub fn decision(&self, x: &[f64]) -> f64 {
        check_dim(x, self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.decision(x) > 0.0) as u8
    }
}

/// Quadratic discriminant with one covariance per class.
pub struct QdaModel {
    pub means: [DVector<f64>; 2],
    pub priors: [f64; 2],
    pub log_dets: [f64; 2],
    factors: [SpdFactor; 2],
}

impl std::fmt::Debug for QdaModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QdaModel")
            .field("means", &self.means)
            .field("priors", &self.priors)
            .field("log_dets", &self.log_dets)
            .finish_non_exhaustive()
    }
}

pub fn qda_train(data: &LabeledFeatureMatrix) -> Result<QdaModel> {
    let m = class_moments(data)?;
    let [mut c0, mut c1] = m.covariances;
    linalg::regularize(&mut c0);
    linalg::regularize(&mut c1);
    let factors = [
        SpdFactor::new(c0, "class 0 covariance")?,
        SpdFactor::new(c1, "class 1 covariance")?,
    ];
    let log_dets = [factors[0].log_det(), factors[1].log_det()];
    if log_dets.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("QDA covariance determinant is not finite".into()));
    }
    Ok(QdaModel {
        means: m.means,
        priors: m.priors,
        log_dets,
        factors,
    })
}

impl QdaModel {
    fn discriminant(&self, c: usize, x: &DVector<f64>) -> f64 {
        let diff = x - &self.means[c];
        -0.5 * self.log_dets[c] - 0.5 * self.factors[c].mahalanobis(&diff) + self.priors[c].ln()
    }

    /// `g₁(x) - g₀(x)`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        check_dim(x, self.means[0].len());
        let v = DVector::from_column_slice(x);
        self.discriminant(1, &v) - self.discriminant(0, &v)
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.decision(x) > 0.0) as u8
    }
}
