//! Trials, segments and datasets.
//!
//! A [`Trial`] is one multi-channel recording of a single mental task. The
//! classification samples are the fixed-length, non-overlapping
//! [`SegmentedSample`]s cut from each trial by [`segment_trial`].

mod io;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use io::write_atomic;
pub use io::{load_dataset, write_dataset, Manifest, ManifestTrial};
pub use synth::{synth_generate, ArBackground, BandComponent, ChannelCopy, SynthSpec, TaskProfile};

/// Binary class label used inside the pipeline (0 or 1).
pub type Label = u8;

/// The five mental tasks of the canonical protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskLabel {
    /// Baseline (relax).
    B,
    /// Letter composing.
    L,
    /// Non-trivial multiplication.
    M,
    /// Visual counting.
    C,
    /// Geometric figure rotation.
    R,
}

impl TaskLabel {
    pub const ALL: [TaskLabel; 5] = [TaskLabel::B, TaskLabel::L, TaskLabel::M, TaskLabel::C, TaskLabel::R];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskLabel::B => "B",
            TaskLabel::L => "L",
            TaskLabel::M => "M",
            TaskLabel::C => "C",
            TaskLabel::R => "R",
        }
    }
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "B" => Ok(TaskLabel::B),
            "L" => Ok(TaskLabel::L),
            "M" => Ok(TaskLabel::M),
            "C" => Ok(TaskLabel::C),
            "R" => Ok(TaskLabel::R),
            other => Err(Error::Data(format!("unknown task label {other:?}"))),
        }
    }
}

/// A fixed-rate window of real samples; the unit of PSD estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSegment {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl TimeSeriesSegment {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("segment has no samples".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Data(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }
}

/// One multi-channel recording of a single task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub channels: Vec<Vec<f64>>,
    pub task: TaskLabel,
    pub subject: String,
    pub trial_index: usize,
}

impl Trial {
    pub fn new(channels: Vec<Vec<f64>>, task: TaskLabel, subject: impl Into<String>, trial_index: usize) -> Result<Self> {
        let subject = subject.into();
        if channels.is_empty() {
            return Err(Error::Data(format!("trial {subject}/{task}/{trial_index} has no channels")));
        }
        let len = channels[0].len();
        if let Some(c) = channels.iter().position(|ch| ch.len() != len) {
            return Err(Error::Data(format!(
                "trial {subject}/{task}/{trial_index}: channel {c} has {} samples, expected {len}",
                channels[c].len()
            )));
        }
        Ok(Self {
            channels,
            task,
            subject,
            trial_index,
        })
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A collection of trials sharing sample rate and channel layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub trials: Vec<Trial>,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
}

impl Dataset {
    pub fn new(trials: Vec<Trial>, sample_rate_hz: f64, channel_names: Vec<String>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Data(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        for t in &trials {
            if t.channels.len() != channel_names.len() {
                return Err(Error::Data(format!(
                    "trial {}/{}/{} has {} channels, dataset declares {}",
                    t.subject,
                    t.task,
                    t.trial_index,
                    t.channels.len(),
                    channel_names.len()
                )));
            }
        }
        Ok(Self {
            trials,
            sample_rate_hz,
            channel_names,
        })
    }

    /// Subject ids in order of first appearance.
    pub fn subjects(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.trials {
            if !out.contains(&t.subject) {
                out.push(t.subject.clone());
            }
        }
        out
    }

    pub fn trials_for<'a>(&'a self, subject: &'a str, task: TaskLabel) -> impl Iterator<Item = &'a Trial> + 'a {
        self.trials
            .iter()
            .filter(move |t| t.subject == subject && t.task == task)
    }
}

/// Where a segment came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOrigin {
    pub subject: String,
    pub trial_index: usize,
    pub segment_index: usize,
}

/// One classification sample: a time-aligned segment from every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedSample {
    pub per_channel: Vec<TimeSeriesSegment>,
    pub label: Label,
    pub origin: SegmentOrigin,
}

/// Number of samples in a segment of the given duration.
pub fn segment_length(sample_rate_hz: f64, segment_seconds: f64) -> Result<usize> {
    if !(segment_seconds.is_finite() && segment_seconds > 0.0) {
        return Err(Error::Config(format!("segment duration must be positive, got {segment_seconds}")));
    }
    let len = (segment_seconds * sample_rate_hz).round();
    if len < 2.0 {
        return Err(Error::Config(format!(
            "segment of {segment_seconds} s at {sample_rate_hz} Hz has fewer than 2 samples"
        )));
    }
    Ok(len as usize)
}

/// Cuts a trial into contiguous, non-overlapping segments in temporal order.
///
/// Trailing samples that do not fill a whole segment are dropped.
pub fn segment_trial(trial: &Trial, sample_rate_hz: f64, segment_seconds: f64, label: Label) -> Result<Vec<SegmentedSample>> {
    let seg_len = segment_length(sample_rate_hz, segment_seconds)?;
    if label > 1 {
        return Err(Error::Config(format!("label must be 0 or 1, got {label}")));
    }
    for (c, ch) in trial.channels.iter().enumerate() {
        if let Some(i) = ch.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "trial {}/{}/{} channel {c} sample {i} is not finite",
                trial.subject, trial.task, trial.trial_index
            )));
        }
    }
    let count = trial.len() / seg_len;
    if count == 0 {
        return Err(Error::Empty(format!(
            "segment of {seg_len} samples is longer than trial of {} samples",
            trial.len()
        )));
    }
    (0..count)
        .map(|s| {
            let range = s * seg_len..(s + 1) * seg_len;
            let per_channel = trial
                .channels
                .iter()
                .map(|ch| TimeSeriesSegment::new(ch[range.clone()].to_vec(), sample_rate_hz))
                .collect::<Result<Vec<_>>>()?;
            Ok(SegmentedSample {
                per_channel,
                label,
                origin: SegmentOrigin {
                    subject: trial.subject.clone(),
                    trial_index: trial.trial_index,
                    segment_index: s,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_trial(n: usize, channels: usize) -> Trial {
        let chans = (0..channels)
            .map(|c| (0..n).map(|i| (i * (c + 1)) as f64).collect())
            .collect();
        Trial::new(chans, TaskLabel::B, "s1", 0).unwrap()
    }

    #[test]
    fn ten_second_trial_gives_twenty_half_second_segments() {
        let t = ramp_trial(2500, 6);
        let segs = segment_trial(&t, 250.0, 0.5, 0).unwrap();
        assert_eq!(segs.len(), 20);
        assert!(segs.iter().all(|s| s.per_channel.len() == 6 && s.per_channel.iter().all(|c| c.len() == 125)));
        assert_eq!(segs[3].origin.segment_index, 3);
    }

    #[test]
    fn exact_fit_returns_input() {
        let t = ramp_trial(125, 2);
        let segs = segment_trial(&t, 250.0, 0.5, 1).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].per_channel[1].samples(), t.channels[1].as_slice());
        assert_eq!(segs[0].label, 1);
    }

    #[test]
    fn trailing_remainder_dropped() {
        let t = ramp_trial(2499, 1);
        let segs = segment_trial(&t, 250.0, 0.5, 0).unwrap();
        assert_eq!(segs.len(), 19);
        assert_eq!(*segs[18].per_channel[0].samples().last().unwrap(), 2374.0);
    }

    #[test]
    fn segment_longer_than_trial_is_empty_error() {
        let t = ramp_trial(100, 1);
        assert!(matches!(segment_trial(&t, 250.0, 0.5, 0), Err(Error::Empty(_))));
    }

    #[test]
    fn non_finite_sample_is_data_error() {
        let mut t = ramp_trial(300, 2);
        t.channels[1][17] = f64::NAN;
        assert!(matches!(segment_trial(&t, 250.0, 0.5, 0), Err(Error::Data(_))));
    }

    #[test]
    fn too_short_segment_rejected() {
        let t = ramp_trial(300, 1);
        assert!(matches!(segment_trial(&t, 250.0, 0.004, 0), Err(Error::Config(_))));
    }

    #[test]
    fn ragged_trial_rejected() {
        let r = Trial::new(vec![vec![0.0; 10], vec![0.0; 9]], TaskLabel::M, "s", 1);
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn task_label_parse() {
        assert_eq!("R".parse::<TaskLabel>().unwrap(), TaskLabel::R);
        assert!("X".parse::<TaskLabel>().is_err());
    }

    proptest! {
        #[test]
        fn segments_partition_used_prefix(n in 2usize..3000, secs in 0.05f64..1.5) {
            let fs = 250.0;
            let seg_len = (secs * fs).round() as usize;
            prop_assume!(seg_len >= 2);
            let t = Trial::new(vec![(0..n).map(|i| i as f64).collect()], TaskLabel::C, "p", 0).unwrap();
            match segment_trial(&t, fs, secs, 0) {
                Ok(segs) => {
                    prop_assert_eq!(segs.len(), n / seg_len);
                    let joined: Vec<f64> = segs.iter().flat_map(|s| s.per_channel[0].samples().to_vec()).collect();
                    prop_assert_eq!(&joined[..], &t.channels[0][..segs.len() * seg_len]);
                }
                Err(Error::Empty(_)) => prop_assert!(n < seg_len),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
