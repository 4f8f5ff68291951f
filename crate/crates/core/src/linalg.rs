//! Small dense linear-algebra helpers shared by the selection criteria and classifiers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative ridge applied to every covariance: `lambda = RIDGE_SCALE * trace / d`.
pub(crate) const RIDGE_SCALE: f64 = 1e-6;

/// Mean of each column over the selected rows.
pub(crate) fn column_means(x: &DMatrix<f64>, rows: &[usize]) -> DVector<f64> {
    let n = rows.len() as f64;
    DVector::from_fn(x.ncols(), |j, _| rows.iter().map(|&r| x[(r, j)]).sum::<f64>() / n)
}

/// Unbiased covariance of the selected rows.
///
/// Entries are accumulated with explicit loops in row order so that the
/// covariance of a column subset is bit-identical to the matching
/// sub-block of the full covariance.
pub(crate) fn covariance(x: &DMatrix<f64>, rows: &[usize], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = x.ncols();
    let denom = (rows.len().max(2) - 1) as f64;
    let mut centered = DMatrix::zeros(rows.len(), d);
    for (i, &r) in rows.iter().enumerate() {
        for j in 0..d {
            centered[(i, j)] = x[(r, j)] - mean[j];
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut acc = 0.0;
            for i in 0..rows.len() {
                acc += centered[(i, a)] * centered[(i, b)];
            }
            let v = acc / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Adds `lambda * I` with `lambda = RIDGE_SCALE * trace(m) / d`.
///
/// A zero matrix (every feature constant within the class) gets
/// `lambda = RIDGE_SCALE` so that it stays invertible.
pub(crate) fn regularize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    if d == 0 {
        return;
    }
    let trace = m.trace();
    let lambda = if trace == 0.0 { RIDGE_SCALE } else { RIDGE_SCALE * trace / d as f64 };
    for i in 0..d {
        m[(i, i)] += lambda;
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
pub(crate) struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub(crate) fn new(m: DMatrix<f64>, what: &str) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{what} has non-finite entries")));
        }
        let chol = Cholesky::new(m)
            .ok_or_else(|| Error::Numeric(format!("{what} is not positive definite")))?;
        Ok(Self { chol })
    }

    pub(crate) fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `vᵀ M⁻¹ v` through the triangular factor.
    pub(crate) fn mahalanobis(&self, v: &DVector<f64>) -> f64 {
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(v)
            .expect("Cholesky factor has a non-zero diagonal");
        z.norm_squared()
    }

    /// Smallest squared pivot relative to the largest one.
    pub(crate) fn pivot_ratio(&self) -> f64 {
        let diag = self.chol.l_dirty().diagonal();
        let max = diag.iter().fold(0.0f64, |a, &v| a.max(v * v));
        let min = diag.iter().fold(f64::INFINITY, |a, &v| a.min(v * v));
        if max > 0.0 {
            min / max
        } else {
            0.0
        }
    }
}

/// Copies the `idx × idx` sub-block of a square matrix.
pub(crate) fn sub_block(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub(crate) fn sub_vector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_covariance_is_bitwise_sub_block() {
        let x = DMatrix::from_fn(9, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.37 + (i as f64).sin());
        let rows: Vec<usize> = (0..9).collect();
        let full = covariance(&x, &rows, &column_means(&x, &rows));
        let cols = [3usize, 1];
        let xs = x.select_columns(&cols);
        let sub = covariance(&xs, &rows, &column_means(&xs, &rows));
        assert_eq!(sub, sub_block(&full, &cols));
    }

    #[test]
    fn log_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 4.0]));
        let f = SpdFactor::new(m, "diag").unwrap();
        assert!((f.log_det() - 24f64.ln()).abs() < 1e-12);
    }
}
