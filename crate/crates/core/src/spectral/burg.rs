//! Burg autoregressive modelling.
//!
//! Coefficients follow the convention `x(n) = -Σ a_m x(n-m) + e(n)`, i.e. the
//! prediction-error filter is `1 + Σ a_m z^{-m}`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{dtft, FrequencyGrid, PsdEstimate, PsdKind};
use crate::error::{Error, Result};
use crate::signal::TimeSeriesSegment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    /// `a_1..a_p`.
    pub coefficients: Vec<f64>,
    /// Final forward/backward prediction-error power.
    pub noise_variance: f64,
    pub sample_period_s: f64,
    /// Reflection coefficients `k_1..k_p` produced by the recursion.
    pub reflection: Vec<f64>,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// `S(f) = σ² T / |1 + Σ a_i e^{-j2πfiT}|²`, valid for any real `f`.
    pub(crate) fn spectrum_at(&self, freq_hz: f64) -> f64 {
        let fs = 1.0 / self.sample_period_s;
        let mut poly = Vec::with_capacity(self.order() + 1);
        poly.push(1.0);
        poly.extend_from_slice(&self.coefficients);
        let (re, im) = dtft(&poly, freq_hz, fs);
        self.noise_variance * self.sample_period_s / (re * re + im * im)
    }
}

/// Prediction-error powers `E_0..E_p` and the order-`p` filter.
struct BurgPath {
    errors: Vec<f64>,
    coefficients: Vec<f64>,
    reflection: Vec<f64>,
}

fn burg_recursion(segment: &TimeSeriesSegment, order: usize) -> Result<BurgPath> {
    let n = segment.len();
    if order >= n {
        return Err(Error::Config(format!("AR order {order} must be below the segment length {n}")));
    }
    let mean = segment.samples().iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = segment.samples().iter().map(|v| v - mean).collect();
    let e0 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if e0 <= 0.0 {
        return Err(Error::Degenerate("segment has zero variance".into()));
    }

    let mut fwd = x.clone();
    let mut bwd = x;
    let mut a = vec![1.0];
    let mut err = e0;
    let mut errors = vec![e0];
    let mut reflection = Vec::with_capacity(order);
    for m in 1..=order {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in m..n {
            num += fwd[i] * bwd[i - 1];
            den += fwd[i] * fwd[i] + bwd[i - 1] * bwd[i - 1];
        }
        if den <= 0.0 {
            return Err(Error::Degenerate(format!(
                "prediction errors vanish at order {m}; the segment is perfectly predictable"
            )));
        }
        let k = -2.0 * num / den;
        for i in (m..n).rev() {
            let f = fwd[i];
            let b = bwd[i - 1];
            fwd[i] = f + k * b;
            bwd[i] = b + k * f;
        }
        a.push(0.0);
        let prev = a.clone();
        for j in 1..=m {
            a[j] = prev[j] + k * prev[m - j];
        }
        err *= 1.0 - k * k;
        errors.push(err);
        reflection.push(k);
    }
    a.remove(0);
    Ok(BurgPath {
        errors,
        coefficients: a,
        reflection,
    })
}

/// Fits an order-`p` AR model by Burg's method after removing the segment mean.
pub fn burg_fit(segment: &TimeSeriesSegment, order: usize) -> Result<ArModel> {
    let path = burg_recursion(segment, order)?;
    Ok(ArModel {
        coefficients: path.coefficients,
        noise_variance: *path.errors.last().expect("E_0 always present"),
        sample_period_s: 1.0 / segment.sample_rate_hz(),
        reflection: path.reflection,
    })
}

/// Evaluates the AR spectrum on `grid`.
pub fn ar_psd(model: &ArModel, grid: &FrequencyGrid) -> Result<PsdEstimate> {
    grid.check_nyquist(1.0 / model.sample_period_s)?;
    let power = grid.frequencies().iter().map(|&f| model.spectrum_at(f)).collect();
    PsdEstimate::new(grid.clone(), power, PsdKind::Density)
}

/// `ln σ² + 2p/n`.
pub fn aic(model: &ArModel, n_samples: usize) -> Result<f64> {
    aic_value(model.noise_variance, model.order(), n_samples)
}

fn aic_value(variance: f64, order: usize, n_samples: usize) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!(
            "AIC undefined for prediction-error variance {variance}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::Config("AIC needs at least one sample".into()));
    }
    Ok(variance.ln() + 2.0 * order as f64 / n_samples as f64)
}

/// Order in `range` minimising AIC; ties go to the smaller order.
///
/// A single Burg recursion up to the largest order supplies every candidate.
pub fn select_ar_order(segment: &TimeSeriesSegment, range: RangeInclusive<usize>) -> Result<usize> {
    let (lo, hi) = (*range.start(), *range.end());
    let n = segment.len();
    if lo == 0 || lo > hi || hi >= n {
        return Err(Error::Config(format!(
            "order range {lo}..={hi} must satisfy 0 < lo <= hi < {n}"
        )));
    }
    let path = burg_recursion(segment, hi)?;
    let mut best = (lo, f64::INFINITY);
    for p in lo..=hi {
        let v = aic_value(path.errors[p], p, n)?;
        if v < best.1 {
            best = (p, v);
        }
    }
    Ok(best.0)
}
