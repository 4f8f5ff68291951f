//! Subspace pseudospectra (MUSIC and Pisarenko).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_segment_grid, dtft, FrequencyGrid, PsdEstimate, PsdKind};
use crate::error::{Error, Result};
use crate::signal::TimeSeriesSegment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicConfig {
    /// Number of complex exponentials spanning the signal subspace (2 per real sinusoid).
    pub signal_dim: usize,
    /// Autocorrelation matrix dimension.
    pub corr_dim: usize,
    /// Lower bound on the pseudospectrum denominator.
    pub floor_epsilon: f64,
}

impl Default for MusicConfig {
    fn default() -> Self {
        Self {
            signal_dim: 8,
            corr_dim: 20,
            floor_epsilon: 1e-12,
        }
    }
}

impl MusicConfig {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.signal_dim == 0 || self.signal_dim >= self.corr_dim {
            return Err(Error::Config(format!(
                "MUSIC needs 0 < signal_dim ({}) < corr_dim ({})",
                self.signal_dim, self.corr_dim
            )));
        }
        if self.corr_dim > n_samples {
            return Err(Error::Config(format!(
                "autocorrelation dimension {} exceeds the {n_samples}-sample segment",
                self.corr_dim
            )));
        }
        if !(self.floor_epsilon > 0.0) {
            return Err(Error::Config("floor_epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Biased autocorrelation lags and their Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrEstimate {
    pub lags: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

/// `r[k] = (1/N) Σ x(n) x(n+k)` for `k < corr_dim`, assembled into a symmetric Toeplitz matrix.
pub fn autocorr_matrix(segment: &TimeSeriesSegment, corr_dim: usize) -> Result<AutocorrEstimate> {
    let n = segment.len();
    if corr_dim == 0 || corr_dim > n {
        return Err(Error::Config(format!(
            "autocorrelation dimension {corr_dim} must be in 1..={n}"
        )));
    }
    let x = segment.samples();
    let lags: Vec<f64> = (0..corr_dim)
        .map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    let matrix = DMatrix::from_fn(corr_dim, corr_dim, |i, j| lags[i.abs_diff(j)]);
    Ok(AutocorrEstimate { lags, matrix })
}

/// Eigenvectors of `R` ordered by descending eigenvalue (index breaks ties).
fn sorted_eigenvectors(r: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let eig = SymmetricEigen::try_new(r.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("eigendecomposition of the autocorrelation matrix failed".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue in autocorrelation matrix".into()));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    Ok(order
        .into_iter()
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect())
}

fn noise_pseudospectrum(
    noise: &[Vec<f64>],
    fs: f64,
    floor: f64,
    grid: &FrequencyGrid,
) -> Result<PsdEstimate> {
    let power = grid
        .frequencies()
        .iter()
        .map(|&f| {
            let den: f64 = noise
                .iter()
                .map(|v| {
                    let (re, im) = dtft(v, f, fs);
                    re * re + im * im
                })
                .sum();
            1.0 / den.max(floor)
        })
        .collect();
    PsdEstimate::new(grid.clone(), power, PsdKind::Pseudospectrum)
}

/// MUSIC pseudospectrum: reciprocal of the summed squared projections of the
/// steering vector onto the `corr_dim - signal_dim` noise eigenvectors.
pub fn music_psd(segment: &TimeSeriesSegment, cfg: &MusicConfig, grid: &FrequencyGrid) -> Result<PsdEstimate> {
    check_segment_grid(segment, grid)?;
    cfg.validate(segment.len())?;
    let r = autocorr_matrix(segment, cfg.corr_dim)?;
    let vecs = sorted_eigenvectors(&r.matrix)?;
    noise_pseudospectrum(&vecs[cfg.signal_dim..], segment.sample_rate_hz(), cfg.floor_epsilon, grid)
}

/// Pisarenko pseudospectrum from the single smallest-eigenvalue eigenvector.
///
/// Requires `corr_dim == signal_dim + 1`.
pub fn pisarenko_psd(segment: &TimeSeriesSegment, cfg: &MusicConfig, grid: &FrequencyGrid) -> Result<PsdEstimate> {
    if cfg.corr_dim != cfg.signal_dim + 1 {
        return Err(Error::Config(format!(
            "Pisarenko needs corr_dim = signal_dim + 1, got {} and {}",
            cfg.corr_dim, cfg.signal_dim
        )));
    }
    music_psd(segment, cfg, grid)
}
