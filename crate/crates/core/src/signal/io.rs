//! Canonical on-disk dataset format.
//!
//! A JSON manifest lists the trials; each trial lives in its own header-less
//! CSV file with one column per channel and one row per sample. Paths in the
//! manifest are resolved relative to the manifest's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, TaskLabel, Trial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub trials: Vec<ManifestTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTrial {
    pub subject: String,
    pub task: String,
    pub trial_index: usize,
    pub file: String,
}

/// Reads a manifest and every trial file it references.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: manifest_path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let n_channels = manifest.channel_names.len();
    if n_channels == 0 {
        return Err(Error::Parse {
            file: manifest_path.to_path_buf(),
            line: 1,
            message: "manifest declares no channels".into(),
        });
    }

    let mut trials = Vec::with_capacity(manifest.trials.len());
    for entry in &manifest.trials {
        let task: TaskLabel = entry.task.parse().map_err(|_| Error::Parse {
            file: manifest_path.to_path_buf(),
            line: locate_line(&text, &entry.task),
            message: format!("unknown task label {:?} (expected one of B, L, M, C, R)", entry.task),
        })?;
        let path = base.join(&entry.file);
        let channels = read_trial_csv(&path, n_channels)?;
        trials.push(Trial::new(channels, task, entry.subject.clone(), entry.trial_index)?);
    }
    Dataset::new(trials, manifest.sample_rate_hz, manifest.channel_names)
}

fn locate_line(text: &str, needle: &str) -> usize {
    let quoted = format!("\"{needle}\"");
    text.lines().position(|l| l.contains(&quoted)).map_or(1, |i| i + 1)
}

fn read_trial_csv(path: &Path, n_channels: usize) -> Result<Vec<Vec<f64>>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(0, format!("{other:?}")),
        })?;
    let mut channels = vec![Vec::new(); n_channels];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n_channels {
            return Err(parse_err(
                line,
                format!("channel length mismatch: row has {} values, expected {n_channels}", record.len()),
            ));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column {c}: {field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {c}: non-finite value")));
            }
            channels[c].push(v);
        }
    }
    Ok(channels)
}

/// File name used for a trial by [`write_dataset`].
pub fn trial_file_name(trial: &Trial) -> String {
    let safe: String = trial
        .subject
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}_{}_{}.csv", trial.task, trial.trial_index)
}

/// Writes a dataset as a manifest plus one CSV per trial next to it.
///
/// Values are printed with 9 significant digits.
pub fn write_dataset(dataset: &Dataset, manifest_path: &Path) -> Result<()> {
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    if !base.as_os_str().is_empty() {
        fs::create_dir_all(&base).map_err(|e| Error::io(&base, e))?;
    }
    let mut entries = Vec::with_capacity(dataset.trials.len());
    for trial in &dataset.trials {
        let name = trial_file_name(trial);
        let mut out = String::with_capacity(trial.len() * dataset.channel_names.len() * 16);
        for i in 0..trial.len() {
            for (c, ch) in trial.channels.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{:.8e}", ch[i]));
            }
            out.push('\n');
        }
        write_atomic(&base.join(&name), out.as_bytes())?;
        entries.push(ManifestTrial {
            subject: trial.subject.clone(),
            task: trial.task.to_string(),
            trial_index: trial.trial_index,
            file: name,
        });
    }
    let manifest = Manifest {
        sample_rate_hz: dataset.sample_rate_hz,
        channel_names: dataset.channel_names.clone(),
        trials: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(manifest_path, json.as_bytes())
}

/// Writes `bytes` to a temporary file in the target directory and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
