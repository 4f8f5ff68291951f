//! Repeated stratified k-fold cross-validation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{row, Trainer};
use crate::error::{Error, Result};
use crate::select::{LabeledFeatureMatrix, SelectionTrace};
use crate::signal::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub n_folds: usize,
    pub n_runs: usize,
    /// Run `r` draws its folds from seed `seed + r`.
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            n_runs: 10,
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config(format!("n_folds must be at least 2, got {}", self.n_folds)));
        }
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fold index of each sample.
///
/// Each class is shuffled and dealt round-robin; class 1 continues where
/// class 0 stopped so that fold sizes stay balanced too.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(Error::Data(format!("label {l} is not binary")));
        }
        by_class[l as usize].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::Config(format!(
                "class {c} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            folds[i] = (offset + pos) % k;
        }
        offset += members.len() % k;
    }
    Ok(folds)
}

/// Held-out accuracies of one cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    /// `raw[run][fold]`.
    pub raw: Vec<Vec<f64>>,
}

fn fold_assignments(labels: &[Label], cv: &CvConfig) -> Result<Vec<Vec<usize>>> {
    cv.validate()?;
    (0..cv.n_runs)
        .map(|r| stratified_kfold(labels, cv.n_folds, cv.seed.wrapping_add(r as u64)))
        .collect()
}

fn cv_with_folds(data: &LabeledFeatureMatrix, trainer: &dyn Trainer, folds: &[Vec<usize>], k: usize) -> Result<CvResult> {
    let jobs: Vec<(usize, usize)> = (0..folds.len()).flat_map(|r| (0..k).map(move |f| (r, f))).collect();
    let accs: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let assign = &folds[r];
            let train: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] != f).collect();
            let test: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == f).collect();
            let model = trainer
                .train(&data.select_rows(&train))
                .map_err(|e| e.context(format!("{} training failed in run {r}, fold {f}", trainer.name())))?;
            let x = data.values();
            let hits = test.iter().filter(|&&i| model.predict(&row(x, i)) == data.labels()[i]).count();
            Ok(hits as f64 / test.len() as f64)
        })
        .collect();
    let mut raw = vec![Vec::with_capacity(k); folds.len()];
    let mut sum = 0.0;
    for ((r, _), acc) in jobs.iter().zip(accs) {
        let acc = acc?;
        sum += acc;
        raw[*r].push(acc);
    }
    Ok(CvResult {
        mean_accuracy: sum / jobs.len() as f64,
        raw,
    })
}

/// Mean held-out accuracy over `n_runs × n_folds` train/test splits.
pub fn cv_accuracy(data: &LabeledFeatureMatrix, trainer: &dyn Trainer, cv: &CvConfig) -> Result<CvResult> {
    let folds = fold_assignments(data.labels(), cv)?;
    cv_with_folds(data, trainer, &folds, cv.n_folds)
}

/// Accuracy curve over the first `k = 1..=len` features of a selection trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub classifier: String,
    pub criterion: String,
    pub cv: CvConfig,
    pub feature_indices: Vec<usize>,
    /// `curve[k - 1]` is the mean accuracy with the first `k` features.
    pub curve: Vec<f64>,
    /// Smallest `k` reaching the best accuracy.
    pub best_k: usize,
    pub best_accuracy: f64,
    /// `raw[k - 1][run][fold]`.
    pub raw: Vec<Vec<Vec<f64>>>,
}

impl CvReport {
    /// Writes `k,mean_accuracy` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,mean_accuracy")?;
        for (k, a) in self.curve.iter().enumerate() {
            writeln!(out, "{},{a}", k + 1)?;
        }
        Ok(())
    }
}

pub fn incremental_evaluation(
    data: &LabeledFeatureMatrix,
    trace: &SelectionTrace,
    trainer: &dyn Trainer,
    cv: &CvConfig,
) -> Result<CvReport> {
    if trace.indices.is_empty() {
        return Err(Error::Empty("selection trace is empty".into()));
    }
    let folds = fold_assignments(data.labels(), cv)?;
    let mut curve = Vec::with_capacity(trace.indices.len());
    let mut raw = Vec::with_capacity(trace.indices.len());
    for k in 1..=trace.indices.len() {
        let sub = data.select_columns(&trace.indices[..k]);
        let res = cv_with_folds(&sub, trainer, &folds, cv.n_folds).map_err(|e| e.context(format!("top {k} features")))?;
        curve.push(res.mean_accuracy);
        raw.push(res.raw);
    }
    let (best_k, best_accuracy) = curve
        .iter()
        .enumerate()
        .fold((1, f64::NEG_INFINITY), |best, (i, &a)| if a > best.1 { (i + 1, a) } else { best });
    Ok(CvReport {
        classifier: trainer.name().into(),
        criterion: trace.criterion.clone(),
        cv: *cv,
        feature_indices: trace.indices.clone(),
        curve,
        best_k,
        best_accuracy,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{ClassifierSpec, Predictor};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;

    /// Reads the label back from the last feature column.
    struct Oracle;
    struct OraclePredictor;

    impl Predictor for OraclePredictor {
        fn decision(&self, x: &[f64]) -> f64 {
            x[x.len() - 1] - 0.5
        }
    }

    impl Trainer for Oracle {
        fn name(&self) -> &str {
            "oracle"
        }

        fn train(&self, _: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>> {
            Ok(Box::new(OraclePredictor))
        }
    }

    fn with_label_column(n: usize, seed: u64) -> LabeledFeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = DMatrix::from_fn(n, 3, |i, j| if j == 0 { labels[i] as f64 } else { rng.random::<f64>() });
        LabeledFeatureMatrix::new(x, labels).unwrap()
    }

    #[test]
    fn divisible_case_is_exactly_balanced() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let folds = stratified_kfold(&labels, 10, 3).unwrap();
        for f in 0..10 {
            let c1 = (0..100).filter(|&i| folds[i] == f && labels[i] == 1).count();
            let c0 = (0..100).filter(|&i| folds[i] == f && labels[i] == 0).count();
            assert_eq!((c0, c1), (5, 5));
        }
    }

    #[test]
    fn folds_depend_on_seed_only() {
        let labels: Vec<u8> = (0..60).map(|i| (i % 3 == 0) as u8).collect();
        assert_eq!(stratified_kfold(&labels, 5, 1).unwrap(), stratified_kfold(&labels, 5, 1).unwrap());
        assert_ne!(stratified_kfold(&labels, 5, 1).unwrap(), stratified_kfold(&labels, 5, 2).unwrap());
        assert!(matches!(stratified_kfold(&[0, 0, 1], 2, 0), Err(Error::Config(_))));
    }

    #[test]
    fn oracle_classifier_scores_one() {
        let m = with_label_column(60, 1);
        let m = m.select_columns(&[1, 2, 0]);
        let r = cv_accuracy(&m, &Oracle, &CvConfig::default()).unwrap();
        assert_eq!(r.mean_accuracy, 1.0);
        assert_eq!(r.raw.len(), 10);
        assert!(r.raw.iter().all(|run| run.len() == 10));
        assert_eq!(r.raw.iter().flatten().count(), 100);
    }

    #[test]
    fn permuted_labels_give_chance_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut labels: Vec<u8> = (0..2000).map(|i| (i % 2) as u8).collect();
        let x = DMatrix::from_fn(2000, 4, |i, j| (i as f64 * 0.01 + j as f64).sin() + rng.random::<f64>());
        labels.shuffle(&mut rng);
        let m = LabeledFeatureMatrix::new(x, labels).unwrap();
        let cv = CvConfig { n_runs: 2, ..CvConfig::default() };
        let r = cv_accuracy(&m, &*ClassifierSpec::Lda.trainer(false), &cv).unwrap();
        assert!((0.45..=0.55).contains(&r.mean_accuracy), "{}", r.mean_accuracy);
    }

    #[test]
    fn perfect_first_feature_gives_best_k_one() {
        let m = with_label_column(40, 2);
        let trace = SelectionTrace {
            criterion: "FDR".into(),
            indices: vec![0, 1, 2],
            scores: vec![3.0, 2.0, 1.0],
        };
        let cv = CvConfig { n_folds: 4, n_runs: 2, seed: 5 };
        let rep = incremental_evaluation(&m, &trace, &*ClassifierSpec::Lda.trainer(true), &cv).unwrap();
        assert_eq!(rep.curve.len(), 3);
        assert_eq!(rep.best_k, 1);
        assert_eq!(rep.best_accuracy, 1.0);
        let max = rep.curve.iter().copied().fold(0.0, f64::max);
        assert_eq!(rep.best_accuracy, max);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("k,mean_accuracy\n1,1\n"));
    }

    #[test]
    fn training_failure_names_run_and_fold() {
        // one sweep cannot reach the requested duality gap
        let m = with_label_column(20, 4).select_columns(&[1, 2]);
        let svm = ClassifierSpec::Svm(crate::classify::SvmConfig { c: 100.0, tol: 1e-14, max_sweeps: 1 });
        let err = cv_accuracy(&m, &*svm.trainer(false), &CvConfig { n_folds: 2, n_runs: 1, seed: 0 }).unwrap_err();
        assert!(err.to_string().contains("run 0, fold"), "{err}");
        assert!(matches!(err.root(), Error::Convergence { .. }));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n0 in 5usize..40, n1 in 5usize..40, k in 2usize..6, seed in 0u64..1000) {
            let mut labels = vec![0u8; n0];
            labels.extend(vec![1u8; n1]);
            let folds = stratified_kfold(&labels, k, seed).unwrap();
            prop_assert_eq!(folds.len(), n0 + n1);
            prop_assert!(folds.iter().all(|&f| f < k));
            for f in 0..k {
                for (c, nc) in [(0u8, n0), (1u8, n1)] {
                    let cnt = (0..labels.len()).filter(|&i| folds[i] == f && labels[i] == c).count() as f64;
                    prop_assert!((cnt - nc as f64 / k as f64).abs() < 1.0 + 1e-12);
                }
            }
        }

        #[test]
        fn cv_is_a_pure_function(seed in 0u64..100) {
            let m = with_label_column(30, seed);
            let cv = CvConfig { n_folds: 3, n_runs: 2, seed };
            let t = ClassifierSpec::Qda.trainer(true);
            let a = cv_accuracy(&m.select_columns(&[1, 2]), &*t, &cv).unwrap();
            let b = cv_accuracy(&m.select_columns(&[1, 2]), &*t, &cv).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.raw.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
