//! Configuration-driven experiments: segmentation, PSD features, selection,
//! cross-validated classification and the cross-method statistics.
//!
//! Work is split into independent units of (subject, task pair, extraction)
//! that may run on a worker pool; results are assembled in configuration
//! order so the report does not depend on scheduling.

mod config;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{cv_accuracy, incremental_evaluation, CvReport, Trainer};
use crate::error::{Error, Result};
use crate::select::{forward_select, LabeledFeatureMatrix, SelectionTrace};
use crate::signal::{segment_trial, Dataset, TaskLabel};
use crate::spectral::{extract_features, ExtractionMethod};
use crate::stats::{
    control_pvalues, friedman_test, percentage_gain, posthoc_table, robust_rank, significance_report, ComparisonTable,
    FriedmanResult, PosthocResult, RankAggregation, SignificanceFlag,
};

pub use config::{DatasetSource, ExperimentConfig};
pub use report::{emit_tables, report_json, Timing};

/// Caveats that apply to every run and are copied into the report.
const PROTOCOL_NOTES: [&str; 3] = [
    "cross-validation samples are segments; segments of one trial can fall in different folds",
    "feature selection uses all segments of a cell before cross-validation",
    "ranking is mean-rank aggregation of percentage gains",
];

/// Accuracy with all features for one classifier in one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub classifier: String,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

/// One (selection, classifier) result inside a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationEntry {
    pub selection: String,
    pub classifier: String,
    pub trace: Option<SelectionTrace>,
    pub report: Option<CvReport>,
    /// Gain of the best accuracy over the matching baseline, in percent.
    pub gain: Option<f64>,
    pub error: Option<String>,
}

/// All results for one subject, task pair and extraction method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub subject: String,
    pub pair: String,
    pub extraction: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub baselines: Vec<BaselineEntry>,
    pub combinations: Vec<CombinationEntry>,
    pub error: Option<String>,
}

/// Cell-then-average summary of one (extraction, selection, classifier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub extraction: String,
    pub selection: String,
    pub classifier: String,
    pub cells: usize,
    pub mean_best_accuracy: Option<f64>,
    pub mean_baseline_accuracy: Option<f64>,
    pub mean_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub subject: String,
    pub pair: String,
    pub extraction: String,
    pub selection: Option<String>,
    pub classifier: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub notes: Vec<String>,
    pub subjects: Vec<String>,
    pub units: Vec<UnitReport>,
    pub summary: Vec<SummaryRow>,
    /// Gains with methods `"<selection> + <extraction>"` as rows and
    /// `"<subject>/<pair>/<classifier>"` cells as columns.
    pub gain_table: Option<ComparisonTable>,
    pub ranking: Option<RankAggregation>,
    pub friedman: Option<FriedmanResult>,
    pub posthoc: Option<PosthocResult>,
    pub significance: Vec<SignificanceFlag>,
    /// Why the statistics are missing, when they are.
    pub statistics_note: Option<String>,
    pub failures: Vec<FailureRecord>,
}

impl RunReport {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Number of (selection, classifier) results with an accuracy curve.
    pub fn completed_combinations(&self) -> usize {
        self.units
            .iter()
            .flat_map(|u| &u.combinations)
            .filter(|c| c.report.is_some())
            .count()
    }
}

pub(crate) fn method_name(selection: &str, extraction: &str) -> String {
    format!("{selection} + {extraction}")
}

/// Feature matrix of one subject and task pair.
fn unit_matrix(data: &Dataset, cfg: &ExperimentConfig, subject: &str, pair: [TaskLabel; 2], method: &ExtractionMethod) -> Result<LabeledFeatureMatrix> {
    let mut samples = Vec::new();
    for (label, task) in pair.iter().enumerate() {
        let mut found = false;
        for trial in data.trials_for(subject, *task) {
            found = true;
            samples.extend(segment_trial(trial, data.sample_rate_hz, cfg.segment_seconds, label as u8)?);
        }
        if !found {
            return Err(Error::Data(format!("subject {subject} has no trials of task {task}")));
        }
    }
    let rows: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| {
            extract_features(s, method, &cfg.grid).map_err(|e| {
                e.context(format!(
                    "trial {} segment {}",
                    s.origin.trial_index, s.origin.segment_index
                ))
            })
        })
        .collect::<Result<_>>()?;
    let labels = samples.iter().map(|s| s.label).collect();
    LabeledFeatureMatrix::from_rows(&rows, labels)
}

fn error_text(e: &Error) -> String {
    e.to_string()
}

fn run_unit(
    data: &Dataset,
    cfg: &ExperimentConfig,
    trainers: &[Box<dyn Trainer>],
    subject: &str,
    pair: [TaskLabel; 2],
    method: &ExtractionMethod,
) -> UnitReport {
    let pair_label = config::pair_name(pair);
    log::info!("{subject} {pair_label} {}: start", method.name());
    let mut unit = UnitReport {
        subject: subject.to_string(),
        pair: pair_label,
        extraction: method.name().to_string(),
        n_samples: 0,
        n_features: 0,
        baselines: Vec::new(),
        combinations: Vec::new(),
        error: None,
    };
    let matrix = match unit_matrix(data, cfg, subject, pair, method) {
        Ok(m) => m,
        Err(e) => {
            unit.error = Some(error_text(&e));
            return unit;
        }
    };
    unit.n_samples = matrix.n_samples();
    unit.n_features = matrix.n_features();
    let baselines: Vec<Option<f64>> = trainers
        .iter()
        .map(|t| match cv_accuracy(&matrix, &**t, &cfg.cv) {
            Ok(r) => {
                unit.baselines.push(BaselineEntry {
                    classifier: t.name().to_string(),
                    accuracy: Some(r.mean_accuracy),
                    error: None,
                });
                Some(r.mean_accuracy)
            }
            Err(e) => {
                unit.baselines.push(BaselineEntry {
                    classifier: t.name().to_string(),
                    accuracy: None,
                    error: Some(error_text(&e)),
                });
                None
            }
        })
        .collect();
    for criterion in &cfg.selections {
        let trace = forward_select(&matrix, criterion, cfg.cap);
        for (t, baseline) in trainers.iter().zip(&baselines) {
            let mut entry = CombinationEntry {
                selection: criterion.name().to_string(),
                classifier: t.name().to_string(),
                trace: None,
                report: None,
                gain: None,
                error: None,
            };
            match &trace {
                Err(e) => entry.error = Some(format!("selection failed: {e}")),
                Ok(tr) => {
                    entry.trace = Some(tr.clone());
                    match incremental_evaluation(&matrix, tr, &**t, &cfg.cv) {
                        Ok(mut rep) => {
                            if !cfg.raw_accuracies {
                                rep.raw.clear();
                            }
                            match baseline {
                                Some(b) => match percentage_gain(rep.best_accuracy, *b) {
                                    Ok(g) => entry.gain = Some(g),
                                    Err(e) => entry.error = Some(error_text(&e)),
                                },
                                None => entry.error = Some("baseline accuracy unavailable".into()),
                            }
                            entry.report = Some(rep);
                        }
                        Err(e) => entry.error = Some(error_text(&e)),
                    }
                }
            }
            unit.combinations.push(entry);
        }
    }
    log::info!("{} {} {}: done", unit.subject, unit.pair, unit.extraction);
    unit
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn collect_failures(units: &[UnitReport]) -> Vec<FailureRecord> {
    let mut out = Vec::new();
    for u in units {
        let rec = |selection: Option<&str>, classifier: Option<&str>, error: &str| FailureRecord {
            subject: u.subject.clone(),
            pair: u.pair.clone(),
            extraction: u.extraction.clone(),
            selection: selection.map(str::to_string),
            classifier: classifier.map(str::to_string),
            error: error.to_string(),
        };
        if let Some(e) = &u.error {
            out.push(rec(None, None, e));
        }
        for b in &u.baselines {
            if let Some(e) = &b.error {
                out.push(rec(None, Some(&b.classifier), e));
            }
        }
        for c in &u.combinations {
            if let Some(e) = &c.error {
                out.push(rec(Some(&c.selection), Some(&c.classifier), e));
            }
        }
    }
    out
}

fn summarize(cfg: &ExperimentConfig, units: &[UnitReport]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for e in &cfg.extractions {
        for s in &cfg.selections {
            for c in &cfg.classifiers {
                let entries: Vec<(&UnitReport, &CombinationEntry)> = units
                    .iter()
                    .filter(|u| u.extraction == e.name())
                    .flat_map(|u| u.combinations.iter().map(move |x| (u, x)))
                    .filter(|(_, x)| x.selection == s.name() && x.classifier == c.name())
                    .collect();
                let done: Vec<&(&UnitReport, &CombinationEntry)> = entries.iter().filter(|(_, x)| x.gain.is_some()).collect();
                rows.push(SummaryRow {
                    extraction: e.name().into(),
                    selection: s.name().into(),
                    classifier: c.name().into(),
                    cells: done.len(),
                    mean_best_accuracy: mean(done.iter().filter_map(|(_, x)| x.report.as_ref().map(|r| r.best_accuracy))),
                    mean_baseline_accuracy: mean(done.iter().filter_map(|(u, _)| {
                        u.baselines.iter().find(|b| b.classifier == c.name()).and_then(|b| b.accuracy)
                    })),
                    mean_gain: mean(done.iter().filter_map(|(_, x)| x.gain)),
                });
            }
        }
    }
    rows
}

/// Builds the gain table; evaluation cells with any missing gain are dropped.
fn gain_table(cfg: &ExperimentConfig, subjects: &[String], units: &[UnitReport]) -> Result<ComparisonTable> {
    let mut methods = Vec::new();
    for s in &cfg.selections {
        for e in &cfg.extractions {
            methods.push((s.name(), e.name()));
        }
    }
    let mut columns = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
    for subject in subjects {
        for pair in &cfg.task_pairs {
            let pair = config::pair_name(*pair);
            for c in &cfg.classifiers {
                let cell: Option<Vec<f64>> = methods
                    .iter()
                    .map(|(s, e)| {
                        units
                            .iter()
                            .find(|u| &u.subject == subject && u.pair == pair && u.extraction == *e)
                            .and_then(|u| u.combinations.iter().find(|x| x.selection == *s && x.classifier == c.name()))
                            .and_then(|x| x.gain)
                    })
                    .collect();
                match cell {
                    Some(gains) => {
                        columns.push(format!("{subject}/{pair}/{}", c.name()));
                        for (row, g) in values.iter_mut().zip(gains) {
                            row.push(g);
                        }
                    }
                    None => log::warn!("{subject}/{pair}/{}: incomplete cell left out of the statistics", c.name()),
                }
            }
        }
    }
    ComparisonTable::new(methods.iter().map(|(s, e)| method_name(s, e)).collect(), columns, values)
}

struct Statistics {
    ranking: Option<RankAggregation>,
    friedman: Option<FriedmanResult>,
    posthoc: Option<PosthocResult>,
    significance: Vec<SignificanceFlag>,
    note: Option<String>,
}

fn statistics(cfg: &ExperimentConfig, table: &ComparisonTable) -> Result<Statistics> {
    let mut out = Statistics {
        ranking: None,
        friedman: None,
        posthoc: None,
        significance: Vec::new(),
        note: None,
    };
    if table.n_methods() < 2 || table.n_columns() == 0 {
        out.note = Some(format!(
            "ranking needs at least 2 combinations and 1 complete cell (have {} × {})",
            table.n_methods(),
            table.n_columns()
        ));
        return Ok(out);
    }
    let ranking = robust_rank(table)?;
    if table.n_columns() < 2 {
        out.note = Some("Friedman test needs at least 2 complete cells".into());
        out.ranking = Some(ranking);
        return Ok(out);
    }
    let friedman = friedman_test(table)?;
    let control = match &cfg.control {
        Some(c) => c.clone(),
        None => ranking.methods[ranking.ordering[0]].clone(),
    };
    let comparisons = control_pvalues(&friedman, &control)?;
    let posthoc = posthoc_table(&control, &comparisons)?;
    out.significance = significance_report(&posthoc, cfg.alpha)?;
    out.ranking = Some(ranking);
    out.friedman = Some(friedman);
    out.posthoc = Some(posthoc);
    Ok(out)
}

/// Runs every configured combination. `jobs` bounds the worker threads
/// (`None` uses the global pool).
///
/// Failures of individual units or combinations are recorded in the report;
/// only configuration and data-loading problems abort the run.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunReport> {
    cfg.validate()?;
    let data = cfg.dataset.load()?;
    cfg.validate_with(&data)?;
    if let Some(c) = &cfg.control {
        let known = cfg
            .selections
            .iter()
            .any(|s| cfg.extractions.iter().any(|e| &method_name(s.name(), e.name()) == c));
        if !known {
            return Err(Error::Config(format!("control {c:?} is not a configured combination")));
        }
    }
    let subjects = data.subjects();
    if subjects.is_empty() {
        return Err(Error::Empty("dataset has no trials".into()));
    }
    let trainers: Vec<Box<dyn Trainer>> = cfg.classifiers.iter().map(|c| c.trainer(cfg.standardize)).collect();
    let mut work = Vec::new();
    for s in &subjects {
        for p in &cfg.task_pairs {
            for e in &cfg.extractions {
                work.push((s.as_str(), *p, e));
            }
        }
    }
    let run_all = || -> Vec<UnitReport> {
        work.par_iter()
            .map(|&(s, p, e)| run_unit(&data, cfg, &trainers, s, p, e))
            .collect()
    };
    let units = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    let failures = collect_failures(&units);
    let summary = summarize(cfg, &units);
    let (gain_table, stats) = if cfg.selections.is_empty() {
        (
            None,
            Statistics {
                ranking: None,
                friedman: None,
                posthoc: None,
                significance: Vec::new(),
                note: Some("no selection methods configured".into()),
            },
        )
    } else {
        let table = gain_table(cfg, &subjects, &units)?;
        let stats = statistics(cfg, &table)?;
        (Some(table), stats)
    };
    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        notes: PROTOCOL_NOTES.iter().map(|s| s.to_string()).collect(),
        subjects,
        units,
        summary,
        gain_table,
        ranking: stats.ranking,
        friedman: stats.friedman,
        posthoc: stats.posthoc,
        significance: stats.significance,
        statistics_note: stats.note,
        failures,
    })
}
