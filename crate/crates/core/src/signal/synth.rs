//! Synthetic EEG-like trials.
//!
//! Each channel is a sum of band-limited sinusoids (one per configured band,
//! frequency drawn inside the band and phase drawn uniformly per trial),
//! white Gaussian noise, and an optional AR(2) coloured background. Task
//! differences exist only where the task profiles list different bands.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, TaskLabel, Trial};
use crate::error::{Error, Result};

/// A sinusoidal component confined to `[center - bw/2, center + bw/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandComponent {
    pub center_hz: f64,
    #[serde(default)]
    pub bandwidth_hz: f64,
    /// Peak amplitude per channel.
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskProfile {
    pub task: TaskLabel,
    #[serde(default)]
    pub bands: Vec<BandComponent>,
}

/// Coloured background `x(n) = c1 x(n-1) + c2 x(n-2) + e(n)`, `e ~ N(0, variance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArBackground {
    pub coefficients: [f64; 2],
    pub variance: f64,
}

/// Overwrites `target` with `gain * source` plus independent white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCopy {
    pub source: usize,
    pub target: usize,
    #[serde(default = "one")]
    pub gain: f64,
    #[serde(default)]
    pub noise_std: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub sample_rate_hz: f64,
    pub samples_per_trial: usize,
    pub channel_names: Vec<String>,
    pub subjects: Vec<String>,
    pub trials_per_task: usize,
    /// Variance of the white noise added to every channel.
    pub noise_variance: f64,
    #[serde(default)]
    pub background: Option<ArBackground>,
    pub tasks: Vec<TaskProfile>,
    #[serde(default)]
    pub channel_copies: Vec<ChannelCopy>,
}

impl SynthSpec {
    /// Reads a JSON spec and validates it.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SynthSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        spec.validate().map_err(|e| e.context(path.display().to_string()))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz / 2.0;
        let n_ch = self.channel_names.len();
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Config("sample_rate_hz must be positive".into()));
        }
        if n_ch == 0 {
            return Err(Error::Config("at least one channel is required".into()));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::Config("noise_variance must be non-negative".into()));
        }
        for profile in &self.tasks {
            for band in &profile.bands {
                if !(band.center_hz >= 0.0 && band.center_hz < nyquist) {
                    return Err(Error::Config(format!(
                        "task {}: band center {} Hz is not below the Nyquist frequency {nyquist} Hz",
                        profile.task, band.center_hz
                    )));
                }
                if !(band.bandwidth_hz.is_finite() && band.bandwidth_hz >= 0.0) {
                    return Err(Error::Config(format!("task {}: negative bandwidth", profile.task)));
                }
                if band.amplitudes.len() != n_ch {
                    return Err(Error::Config(format!(
                        "task {}: band at {} Hz lists {} amplitudes for {n_ch} channels",
                        profile.task,
                        band.center_hz,
                        band.amplitudes.len()
                    )));
                }
            }
        }
        if let Some(bg) = &self.background {
            let [c1, c2] = bg.coefficients;
            if !(c2.abs() < 1.0 && c1 + c2 < 1.0 && c2 - c1 < 1.0) {
                return Err(Error::Config(format!("AR(2) background {:?} is not stationary", bg.coefficients)));
            }
            if !(bg.variance.is_finite() && bg.variance >= 0.0) {
                return Err(Error::Config("background variance must be non-negative".into()));
            }
        }
        for copy in &self.channel_copies {
            if copy.source >= n_ch || copy.target >= n_ch || copy.source == copy.target {
                return Err(Error::Config(format!(
                    "channel copy {} -> {} is out of range for {n_ch} channels",
                    copy.source, copy.target
                )));
            }
        }
        Ok(())
    }
}

const AR_BURN_IN: usize = 256;

/// Generates a dataset; a pure function of `(spec, seed)`.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.samples_per_trial;
    let fs = spec.sample_rate_hz;
    let nyquist = fs / 2.0;
    let n_ch = spec.channel_names.len();
    let white = Normal::new(0.0, spec.noise_variance.sqrt()).expect("validated variance");

    let mut trials = Vec::new();
    let mut stream = 0u64;
    for subject in &spec.subjects {
        for profile in &spec.tasks {
            for t in 0..spec.trials_per_task {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                stream += 1;

                let mut channels = vec![vec![0.0; n]; n_ch];
                for band in &profile.bands {
                    let half = band.bandwidth_hz / 2.0;
                    let f = if half > 0.0 {
                        rng.random_range(band.center_hz - half..band.center_hz + half)
                    } else {
                        band.center_hz
                    }
                    .clamp(0.0, nyquist * (1.0 - 1e-9));
                    for (ch, &amp) in channels.iter_mut().zip(&band.amplitudes) {
                        let phase = rng.random_range(0.0..2.0 * PI);
                        if amp == 0.0 {
                            continue;
                        }
                        for (i, x) in ch.iter_mut().enumerate() {
                            *x += amp * (2.0 * PI * f * i as f64 / fs + phase).sin();
                        }
                    }
                }
                if let Some(bg) = &spec.background {
                    let innov = Normal::new(0.0, bg.variance.sqrt()).expect("validated variance");
                    let [c1, c2] = bg.coefficients;
                    for ch in channels.iter_mut() {
                        let (mut x1, mut x2) = (0.0, 0.0);
                        for i in 0..AR_BURN_IN + n {
                            let x = c1 * x1 + c2 * x2 + innov.sample(&mut rng);
                            x2 = x1;
                            x1 = x;
                            if i >= AR_BURN_IN {
                                ch[i - AR_BURN_IN] += x;
                            }
                        }
                    }
                }
                for ch in channels.iter_mut() {
                    for x in ch.iter_mut() {
                        *x += white.sample(&mut rng);
                    }
                }
                for copy in &spec.channel_copies {
                    let noise = Normal::new(0.0, copy.noise_std.abs()).expect("finite std");
                    let src = channels[copy.source].clone();
                    for (x, s) in channels[copy.target].iter_mut().zip(src) {
                        *x = copy.gain * s + noise.sample(&mut rng);
                    }
                }
                trials.push(Trial::new(channels, profile.task, subject.clone(), t)?);
            }
        }
    }
    Dataset::new(trials, fs, spec.channel_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(amp: f64, noise: f64) -> SynthSpec {
        SynthSpec {
            sample_rate_hz: 250.0,
            samples_per_trial: 500,
            channel_names: vec!["a".into(), "b".into(), "c".into()],
            subjects: vec!["s1".into(), "s2".into()],
            trials_per_task: 2,
            noise_variance: noise,
            background: None,
            tasks: vec![
                TaskProfile {
                    task: TaskLabel::B,
                    bands: vec![],
                },
                TaskProfile {
                    task: TaskLabel::C,
                    bands: vec![BandComponent {
                        center_hz: 10.0,
                        bandwidth_hz: 1.0,
                        amplitudes: vec![amp, amp, 0.0],
                    }],
                },
            ],
            channel_copies: vec![],
        }
    }

    #[test]
    fn zero_everything_gives_zero_trials() {
        let ds = synth_generate(&spec(0.0, 0.0), 3).unwrap();
        assert_eq!(ds.trials.len(), 8);
        assert!(ds.trials.iter().all(|t| t.channels.iter().flatten().all(|&v| v == 0.0)));
    }

    #[test]
    fn same_seed_is_identical_and_seeds_differ() {
        let a = synth_generate(&spec(1.0, 1.0), 11).unwrap();
        let b = synth_generate(&spec(1.0, 1.0), 11).unwrap();
        let c = synth_generate(&spec(1.0, 1.0), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bits = |d: &Dataset| -> Vec<u64> { d.trials.iter().flat_map(|t| t.channels.iter().flatten().map(|v| v.to_bits())).collect() };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn band_at_nyquist_rejected() {
        let mut s = spec(1.0, 1.0);
        s.tasks[1].bands[0].center_hz = 125.0;
        assert!(matches!(synth_generate(&s, 0), Err(Error::Config(_))));
    }

    #[test]
    fn unstable_background_rejected() {
        let mut s = spec(1.0, 1.0);
        s.background = Some(ArBackground {
            coefficients: [1.2, 0.1],
            variance: 1.0,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn exact_copy_duplicates_channel() {
        let mut s = spec(1.0, 1.0);
        s.channel_copies.push(ChannelCopy {
            source: 0,
            target: 2,
            gain: 1.0,
            noise_std: 0.0,
        });
        let ds = synth_generate(&s, 5).unwrap();
        for t in &ds.trials {
            assert_eq!(t.channels[0], t.channels[2]);
        }
    }
}
