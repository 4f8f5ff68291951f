//! Power spectral density estimators and PSD feature assembly.
//!
//! All estimators evaluate on an arbitrary [`FrequencyGrid`] by direct
//! complex-exponential summation, so grid points need not coincide with DFT
//! bins. Welch and Burg return two-sided densities in amplitude²/Hz; MUSIC and
//! Pisarenko return uncalibrated pseudospectra (see [`PsdKind`]).

mod burg;
mod features;
mod music;
mod welch;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::TimeSeriesSegment;

pub use burg::{aic, ar_psd, burg_fit, select_ar_order, ArModel};
pub use features::{extract_features, ExtractionMethod};
pub use music::{autocorr_matrix, music_psd, pisarenko_psd, AutocorrEstimate, MusicConfig};
pub use welch::{periodogram, welch_psd, WelchConfig};

/// Taper applied to each (sub-)segment before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Rectangular,
    Hamming,
    Hann,
}

impl WindowKind {
    /// Periodic (DFT-even) window of length `m`; a single-point window is `[1.0]`.
    pub fn values(self, m: usize) -> Vec<f64> {
        if m <= 1 {
            return vec![1.0; m];
        }
        let step = 2.0 * PI / m as f64;
        (0..m)
            .map(|n| match self {
                WindowKind::Rectangular => 1.0,
                WindowKind::Hamming => 0.54 - 0.46 * (step * n as f64).cos(),
                WindowKind::Hann => 0.5 - 0.5 * (step * n as f64).cos(),
            })
            .collect()
    }

    /// Window power `U = (1/M) Σ w²(n)`.
    pub fn power(self, m: usize) -> f64 {
        let w = self.values(m);
        w.iter().map(|v| v * v).sum::<f64>() / m as f64
    }
}

/// Ascending evaluation frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid {
    frequencies: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::Config("frequency grid is empty".into()));
        }
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::Config("grid frequencies must be finite and non-negative".into()));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid frequencies must be strictly increasing".into()));
        }
        Ok(Self { frequencies })
    }

    /// `count` points `start, start + step, ...`.
    pub fn uniform(start_hz: f64, step_hz: f64, count: usize) -> Result<Self> {
        Self::new((0..count).map(|i| start_hz + step_hz * i as f64).collect())
    }

    /// 52 points from 0 to 25.5 Hz in 0.5 Hz steps.
    pub fn canonical() -> Self {
        Self::uniform(0.0, 0.5, 52).expect("canonical grid is valid")
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub(crate) fn check_nyquist(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist = sample_rate_hz / 2.0;
        match self.frequencies.last() {
            Some(&f) if f > nyquist => Err(Error::Range(format!(
                "grid reaches {f} Hz, above the Nyquist frequency {nyquist} Hz"
            ))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.frequencies
    }
}

/// Whether a PSD is a calibrated density or a peak-locating pseudospectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdKind {
    Density,
    Pseudospectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub grid: FrequencyGrid,
    pub power: Vec<f64>,
    pub kind: PsdKind,
}

impl PsdEstimate {
    pub(crate) fn new(grid: FrequencyGrid, power: Vec<f64>, kind: PsdKind) -> Result<Self> {
        debug_assert_eq!(grid.len(), power.len());
        if let Some(i) = power.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Numeric(format!(
                "PSD value {} at {} Hz is not a finite non-negative number",
                power[i],
                grid.frequencies()[i]
            )));
        }
        Ok(Self { grid, power, kind })
    }

    /// Index of the largest power value (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.power.iter().enumerate() {
            if p > self.power[best] {
                best = i;
            }
        }
        best
    }

    /// Writes `frequency,power` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "frequency_hz,power")?;
        for (f, p) in self.grid.frequencies().iter().zip(&self.power) {
            writeln!(out, "{f},{p}")?;
        }
        Ok(())
    }
}

/// Trapezoidal integral of `psd` over `[f_lo, f_hi]`.
///
/// Band edges that fall between grid points are linearly interpolated.
pub fn band_power(psd: &PsdEstimate, f_lo: f64, f_hi: f64) -> Result<f64> {
    let freqs = psd.grid.frequencies();
    let (first, last) = (freqs[0], freqs[freqs.len() - 1]);
    if !(f_lo <= f_hi) || f_lo < first || f_hi > last {
        return Err(Error::Range(format!(
            "band [{f_lo}, {f_hi}] Hz is not inside the grid span [{first}, {last}] Hz"
        )));
    }
    if f_lo == f_hi {
        return Ok(0.0);
    }
    let interp = |f: f64| -> f64 {
        let i = freqs.partition_point(|&g| g < f);
        if i < freqs.len() && freqs[i] == f {
            return psd.power[i];
        }
        let (f0, f1) = (freqs[i - 1], freqs[i]);
        let t = (f - f0) / (f1 - f0);
        psd.power[i - 1] * (1.0 - t) + psd.power[i] * t
    };
    let mut pts = vec![(f_lo, interp(f_lo))];
    for (f, p) in freqs.iter().zip(&psd.power) {
        if *f > f_lo && *f < f_hi {
            pts.push((*f, *p));
        }
    }
    pts.push((f_hi, interp(f_hi)));
    Ok(pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}

/// `Σ c[n] e^{-j 2π f n / fs}` as (re, im).
pub(crate) fn dtft(coeffs: &[f64], freq_hz: f64, sample_rate_hz: f64) -> (f64, f64) {
    let omega = 2.0 * PI * freq_hz / sample_rate_hz;
    let mut re = 0.0;
    let mut im = 0.0;
    for (n, &c) in coeffs.iter().enumerate() {
        let (s, co) = (omega * n as f64).sin_cos();
        re += c * co;
        im -= c * s;
    }
    (re, im)
}

pub(crate) fn check_segment_grid(segment: &TimeSeriesSegment, grid: &FrequencyGrid) -> Result<()> {
    grid.check_nyquist(segment.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_grid_has_52_points() {
        let g = FrequencyGrid::canonical();
        assert_eq!(g.len(), 52);
        assert_eq!(g.frequencies()[0], 0.0);
        assert_eq!(g.frequencies()[51], 25.5);
    }

    #[test]
    fn grid_rejects_non_increasing() {
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![]).is_err());
    }

    #[test]
    fn windows_bounded_with_positive_power() {
        for kind in [WindowKind::Rectangular, WindowKind::Hamming, WindowKind::Hann] {
            for m in [1usize, 2, 7, 62, 125] {
                let w = kind.values(m);
                assert_eq!(w.len(), m);
                assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
                assert!(kind.power(m) > 0.0);
            }
        }
        assert_eq!(WindowKind::Rectangular.power(10), 1.0);
    }

    fn flat(grid: FrequencyGrid, v: f64) -> PsdEstimate {
        let n = grid.len();
        PsdEstimate::new(grid, vec![v; n], PsdKind::Density).unwrap()
    }

    #[test]
    fn band_power_degenerate_band_is_zero() {
        let psd = flat(FrequencyGrid::canonical(), 2.0);
        assert_eq!(band_power(&psd, 3.3, 3.3).unwrap(), 0.0);
    }

    #[test]
    fn band_power_halves_add_up() {
        let grid = FrequencyGrid::canonical();
        let power: Vec<f64> = grid.frequencies().iter().map(|f| (f * 0.7).sin().abs() + 0.1).collect();
        let psd = PsdEstimate::new(grid, power, PsdKind::Density).unwrap();
        let full = band_power(&psd, 0.0, 25.5).unwrap();
        let lo = band_power(&psd, 0.0, 11.3).unwrap();
        let hi = band_power(&psd, 11.3, 25.5).unwrap();
        assert!((full - lo - hi).abs() < 1e-12 * full);
    }

    #[test]
    fn band_power_flat_is_width_times_level() {
        let psd = flat(FrequencyGrid::canonical(), 2.0);
        assert!((band_power(&psd, 1.25, 7.75).unwrap() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn band_outside_grid_is_range_error() {
        let psd = flat(FrequencyGrid::canonical(), 1.0);
        assert!(matches!(band_power(&psd, 0.0, 30.0), Err(Error::Range(_))));
        assert!(matches!(band_power(&psd, 5.0, 4.0), Err(Error::Range(_))));
    }
}
