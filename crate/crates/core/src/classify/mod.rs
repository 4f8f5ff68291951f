//! Two-class classifiers and the cross-validation protocol.
//!
//! Every classifier exposes a decision value; the sample is assigned to
//! class 1 only when the value is strictly positive, so exact boundary ties
//! go to class 0.

mod cv;
mod gaussian;
mod svm;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::select::LabeledFeatureMatrix;
use crate::signal::Label;

pub use cv::{cv_accuracy, incremental_evaluation, stratified_kfold, CvConfig, CvReport, CvResult};
pub use gaussian::{lda_train, qda_train, LdaModel, QdaModel};
pub use svm::{svm_train, SvmConfig, SvmModel};

/// A trained two-class model.
pub trait Predictor: Send + Sync {
    /// Positive values favour class 1.
    fn decision(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> Label {
        (self.decision(x) > 0.0) as Label
    }
}

/// Something that fits a [`Predictor`] to labelled data.
pub trait Trainer: Send + Sync {
    fn name(&self) -> &str;
    fn train(&self, data: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>>;
}

/// Classifier choice as written in experiment configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Lda,
    Qda,
    Svm(SvmConfig),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Lda => "LDA",
            ClassifierSpec::Qda => "QDA",
            ClassifierSpec::Svm(_) => "SVM",
        }
    }

    /// Trainer for this classifier, optionally z-scoring features with
    /// statistics of each training set.
    pub fn trainer(&self, standardize: bool) -> Box<dyn Trainer> {
        let base: Box<dyn Trainer> = match *self {
            ClassifierSpec::Lda => Box::new(Lda),
            ClassifierSpec::Qda => Box::new(Qda),
            ClassifierSpec::Svm(cfg) => Box::new(Svm(cfg)),
        };
        if standardize {
            Box::new(Standardized(base))
        } else {
            base
        }
    }
}

pub struct Lda;
pub struct Qda;
pub struct Svm(pub SvmConfig);

impl Predictor for LdaModel {
    fn decision(&self, x: &[f64]) -> f64 {
        LdaModel::decision(self, x)
    }
}

impl Predictor for QdaModel {
    fn decision(&self, x: &[f64]) -> f64 {
        QdaModel::decision(self, x)
    }
}

impl Predictor for SvmModel {
    fn decision(&self, x: &[f64]) -> f64 {
        SvmModel::decision(self, x)
    }
}

impl Trainer for Lda {
    fn name(&self) -> &str {
        "LDA"
    }

    fn train(&self, data: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(lda_train(data)?))
    }
}

impl Trainer for Qda {
    fn name(&self) -> &str {
        "QDA"
    }

    fn train(&self, data: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(qda_train(data)?))
    }
}

impl Trainer for Svm {
    fn name(&self) -> &str {
        "SVM"
    }

    fn train(&self, data: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(svm_train(data, &self.0)?))
    }
}

/// Wraps a trainer with per-feature z-scoring fitted on the training data.
/// Constant features are centred but not scaled.
pub struct Standardized<T>(pub T);

struct StandardizedPredictor {
    mean: Vec<f64>,
    scale: Vec<f64>,
    inner: Box<dyn Predictor>,
}

impl Predictor for StandardizedPredictor {
    fn decision(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.inner.decision(&z)
    }
}

impl<T: Trainer> Trainer for Standardized<T> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn train(&self, data: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>> {
        let x = data.values();
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        let z = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - mean[j]) / scale[j]);
        let inner = self.0.train(&LabeledFeatureMatrix::new(z, data.labels().to_vec())?)?;
        Ok(Box::new(StandardizedPredictor { mean, scale, inner }))
    }
}

impl Trainer for Box<dyn Trainer> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn train(&self, data: &LabeledFeatureMatrix) -> Result<Box<dyn Predictor>> {
        (**self).train(data)
    }
}

/// Row `i` of a matrix as a vector.
pub(crate) fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_forms() {
        let s: ClassifierSpec = serde_json::from_str(r#"{"classifier":"svm"}"#).unwrap();
        assert_eq!(s, ClassifierSpec::Svm(SvmConfig::default()));
        let s: ClassifierSpec = serde_json::from_str(r#"{"classifier":"svm","c":10.0}"#).unwrap();
        assert_eq!(s, ClassifierSpec::Svm(SvmConfig { c: 10.0, ..SvmConfig::default() }));
        let s: ClassifierSpec = serde_json::from_str(r#"{"classifier":"qda"}"#).unwrap();
        assert_eq!(s.name(), "QDA");
    }

    #[test]
    fn standardized_predictions_match_scaled_training() {
        // LDA is affine invariant apart from the ridge, so scaling every feature
        // by a power of two must not change predictions
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin() + (i % 2) as f64, (i as f64 * 1.3).cos()]).collect();
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let m = LabeledFeatureMatrix::from_rows(&rows, labels.clone()).unwrap();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] * 1024.0, r[1] / 8.0]).collect();
        let ms = LabeledFeatureMatrix::from_rows(&scaled, labels).unwrap();
        let a = ClassifierSpec::Lda.trainer(true).train(&m).unwrap();
        let b = ClassifierSpec::Lda.trainer(true).train(&ms).unwrap();
        for (r, s) in rows.iter().zip(&scaled) {
            assert_eq!(a.predict(r), b.predict(s));
        }
    }
}
