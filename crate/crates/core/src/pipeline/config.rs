use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierSpec, CvConfig};
use crate::error::{Error, Result};
use crate::select::Criterion;
use crate::signal::{load_dataset, synth_generate, Dataset, SynthSpec, TaskLabel};
use crate::spectral::{ExtractionMethod, FrequencyGrid};

/// Where the trials come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    /// A manifest on disk; relative paths are resolved against the config file.
    Manifest { path: PathBuf },
    Synthetic { spec: SynthSpec, seed: u64 },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Manifest { path } => load_dataset(path),
            DatasetSource::Synthetic { spec, seed } => synth_generate(spec, *seed),
        }
    }
}

fn default_segment_seconds() -> f64 {
    0.5
}

fn default_pairs() -> Vec<[TaskLabel; 2]> {
    let all = TaskLabel::ALL;
    let mut out = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            out.push([all[i], all[j]]);
        }
    }
    out
}

fn default_cap() -> usize {
    25
}

fn default_true() -> bool {
    true
}

fn default_alpha() -> f64 {
    0.05
}

/// Full description of one experiment. Every default is written back into
/// the report so a run can be repeated from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_segment_seconds")]
    pub segment_seconds: f64,
    /// Binary problems; the first task of a pair is class 0.
    #[serde(default = "default_pairs")]
    pub task_pairs: Vec<[TaskLabel; 2]>,
    #[serde(default = "FrequencyGrid::canonical")]
    pub grid: FrequencyGrid,
    pub extractions: Vec<ExtractionMethod>,
    #[serde(default)]
    pub selections: Vec<Criterion>,
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub cv: CvConfig,
    /// z-score features with training-fold statistics before fitting.
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Control method for post-hoc tests (`"<selection> + <extraction>"`);
    /// the best-ranked combination when absent.
    #[serde(default)]
    pub control: Option<String>,
    /// Keep per-run, per-fold accuracies in the report.
    #[serde(default)]
    pub raw_accuracies: bool,
}

impl ExperimentConfig {
    /// Reads and validates a JSON config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if let DatasetSource::Manifest { path: m } = &mut cfg.dataset {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    *m = dir.join(&*m);
                }
            }
        }
        cfg.validate().map_err(|e| e.context(path.display().to_string()))?;
        Ok(cfg)
    }

    /// Static checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.extractions.is_empty() {
            return cfg_err("at least one extraction method is required".into());
        }
        if self.classifiers.is_empty() {
            return cfg_err("at least one classifier is required".into());
        }
        if self.task_pairs.is_empty() {
            return cfg_err("at least one task pair is required".into());
        }
        if self.cap == 0 {
            return cfg_err("cap must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return cfg_err(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        for [a, b] in &self.task_pairs {
            if a == b {
                return cfg_err(format!("task pair {a}-{b} repeats a task"));
            }
        }
        unique(self.extractions.iter().map(|e| e.name()), "extraction method")?;
        unique(self.selections.iter().map(|s| s.name()), "selection criterion")?;
        unique(self.classifiers.iter().map(|c| c.name()), "classifier")?;
        unique(self.task_pairs.iter().map(|p| pair_name(*p)), "task pair")?;
        self.cv.validate()?;
        for s in &self.selections {
            if let Criterion::Chernoff { beta } = s {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return cfg_err(format!("Chernoff beta must lie in (0, 1), got {beta}"));
                }
            }
        }
        if let DatasetSource::Synthetic { spec, .. } = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }

    /// Checks that need the data: segment length against the estimators,
    /// the grid against Nyquist, and fold counts against class sizes.
    pub fn validate_with(&self, data: &Dataset) -> Result<()> {
        let seg_len = crate::signal::segment_length(data.sample_rate_hz, self.segment_seconds)?;
        self.grid.check_nyquist(data.sample_rate_hz)?;
        for e in &self.extractions {
            match e {
                ExtractionMethod::Welch(c) => c.validate(seg_len)?,
                ExtractionMethod::Burg { order } => {
                    if *order >= seg_len {
                        return Err(Error::Config(format!("Burg order {order} needs segments longer than {seg_len}")));
                    }
                }
                ExtractionMethod::Music(c) => c.validate(seg_len)?,
            }
        }
        for subject in data.subjects() {
            for [a, b] in &self.task_pairs {
                for task in [a, b] {
                    let segs: usize = data.trials_for(&subject, *task).map(|t| t.len() / seg_len).sum();
                    if segs < self.cv.n_folds {
                        log::warn!(
                            "subject {subject}, task {task}: {segs} segments for {} folds; cells with this task will fail",
                            self.cv.n_folds
                        );
                    }
                }
            }
        }
        Ok(())
    }
}

fn unique<S: AsRef<str>>(names: impl Iterator<Item = S>, what: &str) -> Result<()> {
    let mut seen: Vec<String> = Vec::new();
    for n in names {
        let n = n.as_ref().to_string();
        if seen.contains(&n) {
            return Err(Error::Config(format!("{what} {n} is listed twice")));
        }
        seen.push(n);
    }
    Ok(())
}

pub(crate) fn pair_name([a, b]: [TaskLabel; 2]) -> String {
    format!("{a}-{b}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "dataset": {"source": "manifest", "path": "data/manifest.json"},
            "extractions": [{"method": "burg", "order": 6}],
            "classifiers": [{"classifier": "lda"}]
        }"#
    }

    #[test]
    fn defaults_are_filled_in() {
        let c: ExperimentConfig = serde_json::from_str(minimal()).unwrap();
        assert_eq!(c.segment_seconds, 0.5);
        assert_eq!(c.task_pairs.len(), 10);
        assert_eq!(c.grid.len(), 52);
        assert_eq!(c.cap, 25);
        assert_eq!(c.cv, CvConfig::default());
        assert!(c.standardize && c.selections.is_empty());
        c.validate().unwrap();
    }

    #[test]
    fn relative_manifest_resolves_next_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.json");
        std::fs::write(&p, minimal()).unwrap();
        let c = ExperimentConfig::load(&p).unwrap();
        assert_eq!(c.dataset, DatasetSource::Manifest { path: dir.path().join("data/manifest.json") });
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c: ExperimentConfig = serde_json::from_str(minimal()).unwrap();
        c.cap = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c: ExperimentConfig = serde_json::from_str(minimal()).unwrap();
        c.classifiers.clear();
        assert!(c.validate().is_err());
        let mut c: ExperimentConfig = serde_json::from_str(minimal()).unwrap();
        c.selections = vec![Criterion::Fdr, Criterion::Fdr];
        assert!(c.validate().is_err());
        let mut c: ExperimentConfig = serde_json::from_str(minimal()).unwrap();
        c.task_pairs = vec![[TaskLabel::B, TaskLabel::B]];
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_fields_and_syntax_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.json");
        std::fs::write(&p, "{\n  \"dataset\": {\"source\": \"manifest\", \"path\": \"m.json\"},\n  \"bogus\": 1\n}").unwrap();
        let err = ExperimentConfig::load(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
