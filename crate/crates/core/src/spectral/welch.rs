use serde::{Deserialize, Serialize};

use super::{check_segment_grid, dtft, FrequencyGrid, PsdEstimate, PsdKind, WindowKind};
use crate::error::{Error, Result};
use crate::signal::TimeSeriesSegment;

/// Sub-segment length, hop and taper for Welch averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_len: usize,
    /// Hop between consecutive sub-segment starts, in samples.
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for WelchConfig {
    /// 62-sample Hamming sub-segments with 50 % overlap (sized for 125-sample segments).
    fn default() -> Self {
        Self {
            segment_len: 62,
            hop: 31,
            window: WindowKind::Hamming,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.hop == 0 || self.hop > self.segment_len {
            return Err(Error::Config(format!(
                "Welch hop {} must be in 1..={}",
                self.hop, self.segment_len
            )));
        }
        if self.segment_len > n_samples {
            return Err(Error::Config(format!(
                "Welch sub-segment length {} exceeds the {n_samples}-sample input",
                self.segment_len
            )));
        }
        Ok(())
    }

    /// Number of averaged sub-segments, `1 + floor((N - M) / D)`.
    pub fn n_segments(&self, n_samples: usize) -> usize {
        1 + (n_samples - self.segment_len) / self.hop
    }
}

fn windowed_periodogram(x: &[f64], window: &[f64], u: f64, fs: f64, grid: &FrequencyGrid, out: &mut [f64]) {
    let tapered: Vec<f64> = x.iter().zip(window).map(|(a, w)| a * w).collect();
    let scale = 1.0 / (fs * x.len() as f64 * u);
    for (o, &f) in out.iter_mut().zip(grid.frequencies()) {
        let (re, im) = dtft(&tapered, f, fs);
        *o += scale * (re * re + im * im);
    }
}

/// Windowed periodogram `|Σ w(n) x(n) e^{-j2πfn/fs}|² / (fs · M · U)` on `grid`.
pub fn periodogram(segment: &TimeSeriesSegment, window: WindowKind, grid: &FrequencyGrid) -> Result<PsdEstimate> {
    check_segment_grid(segment, grid)?;
    let m = segment.len();
    let mut power = vec![0.0; grid.len()];
    windowed_periodogram(
        segment.samples(),
        &window.values(m),
        window.power(m),
        segment.sample_rate_hz(),
        grid,
        &mut power,
    );
    PsdEstimate::new(grid.clone(), power, PsdKind::Density)
}

/// Mean of the `K` windowed sub-segment periodograms.
pub fn welch_psd(segment: &TimeSeriesSegment, cfg: &WelchConfig, grid: &FrequencyGrid) -> Result<PsdEstimate> {
    check_segment_grid(segment, grid)?;
    let n = segment.len();
    cfg.validate(n)?;
    let k = cfg.n_segments(n);
    let window = cfg.window.values(cfg.segment_len);
    let u = cfg.window.power(cfg.segment_len);
    let x = segment.samples();
    let mut power = vec![0.0; grid.len()];
    for i in 0..k {
        let start = i * cfg.hop;
        windowed_periodogram(
            &x[start..start + cfg.segment_len],
            &window,
            u,
            segment.sample_rate_hz(),
            grid,
            &mut power,
        );
    }
    if k > 1 {
        power.iter_mut().for_each(|p| *p /= k as f64);
    }
    PsdEstimate::new(grid.clone(), power, PsdKind::Density)
}
