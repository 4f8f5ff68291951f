//! Subset criteria. Each criterion has a prepared scorer built once from the
//! full matrix; scoring a column subset reuses those statistics and gives
//! bit-identical results to the public function applied to the same columns.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::mi::{default_bins, discretize, mutual_information};
use super::{Criterion, LabeledFeatureMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, SpdFactor};

/// Pivot ratio below which the regression system is treated as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-10;
/// Within-class trace floor relative to the total-scatter trace.
const TRACE_FLOOR: f64 = 1e-12;

/// Scores column subsets of one fixed feature matrix.
pub trait SubsetScorer: Sync {
    fn n_features(&self) -> usize;
    fn score(&self, subset: &[usize]) -> Result<f64>;
}

/// Prepares the scorer for a multivariate criterion.
pub fn subset_scorer(matrix: &LabeledFeatureMatrix, criterion: &Criterion) -> Result<Box<dyn SubsetScorer>> {
    Ok(match *criterion {
        Criterion::Bd => Box::new(GaussianScorer::new(matrix, 0.5)?),
        Criterion::Chernoff { beta } => Box::new(GaussianScorer::new(matrix, beta)?),
        Criterion::Sr => Box::new(ScatterScorer::new(matrix)?),
        Criterion::Lr => Box::new(RegressionScorer::new(matrix)?),
        Criterion::Mrmr {
            bins,
            exclude_self_redundancy,
        } => Box::new(MrmrScorer::new(
            matrix,
            bins.unwrap_or_else(|| default_bins(matrix.n_samples())),
            exclude_self_redundancy,
        )?),
        other => return Err(Error::Config(format!("{other} is not a subset criterion"))),
    })
}

fn all_columns(matrix: &LabeledFeatureMatrix) -> Vec<usize> {
    (0..matrix.n_features()).collect()
}

fn check_subset(subset: &[usize], d: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::Empty("feature subset is empty".into()));
    }
    if let Some(&j) = subset.iter().find(|&&j| j >= d) {
        return Err(Error::Range(format!("feature {j} out of range for {d} features")));
    }
    Ok(())
}

/// Gaussian Chernoff distance between the two classes.
pub fn chernoff_distance(matrix: &LabeledFeatureMatrix, beta: f64) -> Result<f64> {
    GaussianScorer::new(matrix, beta)?.score(&all_columns(matrix))
}

/// Gaussian Bhattacharyya distance (Chernoff at `beta = 1/2`).
pub fn bhattacharyya_distance(matrix: &LabeledFeatureMatrix) -> Result<f64> {
    chernoff_distance(matrix, 0.5)
}

pub fn scatter_ratio(matrix: &LabeledFeatureMatrix) -> Result<f64> {
    ScatterScorer::new(matrix)?.score(&all_columns(matrix))
}

/// R² of the least-squares fit of the 0/1 labels on all columns, clamped to `[0, 1]`.
pub fn regression_r2(matrix: &LabeledFeatureMatrix) -> Result<f64> {
    RegressionScorer::new(matrix)?.score(&all_columns(matrix))
}

/// Relevance minus redundancy with binned mutual information.
///
/// Redundancy averages over all ordered pairs including each feature with
/// itself unless `exclude_self` is set.
pub fn mrmr_mid(matrix: &LabeledFeatureMatrix, bins: usize, exclude_self: bool) -> Result<f64> {
    MrmrScorer::new(matrix, bins, exclude_self)?.score(&all_columns(matrix))
}

struct GaussianScorer {
    beta: f64,
    means: [DVector<f64>; 2],
    covariances: [DMatrix<f64>; 2],
}

impl GaussianScorer {
    fn new(matrix: &LabeledFeatureMatrix, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("Chernoff beta must lie in (0, 1), got {beta}")));
        }
        let rows = matrix.require_both_classes()?;
        if rows.iter().any(|r| r.len() < 2) {
            return Err(Error::Data("class covariance needs at least two samples per class".into()));
        }
        let x = matrix.values();
        let means = [linalg::column_means(x, &rows[0]), linalg::column_means(x, &rows[1])];
        let covariances = [
            linalg::covariance(x, &rows[0], &means[0]),
            linalg::covariance(x, &rows[1], &means[1]),
        ];
        Ok(Self {
            beta,
            means,
            covariances,
        })
    }
}

impl SubsetScorer for GaussianScorer {
    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn score(&self, subset: &[usize]) -> Result<f64> {
        check_subset(subset, self.n_features())?;
        let b = self.beta;
        let mut s1 = linalg::sub_block(&self.covariances[0], subset);
        let mut s2 = linalg::sub_block(&self.covariances[1], subset);
        linalg::regularize(&mut s1);
        linalg::regularize(&mut s2);
        let blend = &s1 * (1.0 - b) + &s2 * b;
        let f1 = SpdFactor::new(s1, "class 1 covariance")?;
        let f2 = SpdFactor::new(s2, "class 2 covariance")?;
        let fb = SpdFactor::new(blend, "blended covariance")?;
        let diff = linalg::sub_vector(&self.means[1], subset) - linalg::sub_vector(&self.means[0], subset);
        let quad = diff.dot(&fb.solve(&diff));
        let log_term = fb.log_det() - (1.0 - b) * f1.log_det() - b * f2.log_det();
        let value = 0.5 * b * (1.0 - b) * quad + 0.5 * log_term;
        if !value.is_finite() {
            return Err(Error::Numeric("Chernoff distance is not finite".into()));
        }
        Ok(value)
    }
}

/// Per-feature additive trace contributions of the scatter matrices.
struct ScatterScorer {
    between: Vec<f64>,
    within: Vec<f64>,
    total: Vec<f64>,
}

impl ScatterScorer {
    fn new(matrix: &LabeledFeatureMatrix) -> Result<Self> {
        let rows = matrix.require_both_classes()?;
        let x = matrix.values();
        let n = matrix.n_samples() as f64;
        let all: Vec<usize> = (0..matrix.n_samples()).collect();
        let global = linalg::column_means(x, &all);
        let means = [linalg::column_means(x, &rows[0]), linalg::column_means(x, &rows[1])];
        let priors = [rows[0].len() as f64 / n, rows[1].len() as f64 / n];
        let d = matrix.n_features();
        let mut between = vec![0.0; d];
        let mut within = vec![0.0; d];
        let mut total = vec![0.0; d];
        for j in 0..d {
            for c in 0..2 {
                let nc = rows[c].len() as f64;
                let var = rows[c].iter().map(|&r| (x[(r, j)] - means[c][j]).powi(2)).sum::<f64>() / nc;
                within[j] += priors[c] * var;
                between[j] += priors[c] * (means[c][j] - global[j]).powi(2);
            }
            total[j] = all.iter().map(|&r| (x[(r, j)] - global[j]).powi(2)).sum::<f64>() / n;
        }
        Ok(Self { between, within, total })
    }
}

impl SubsetScorer for ScatterScorer {
    fn n_features(&self) -> usize {
        self.between.len()
    }

    fn score(&self, subset: &[usize]) -> Result<f64> {
        check_subset(subset, self.n_features())?;
        let sb: f64 = subset.iter().map(|&j| self.between[j]).sum();
        if sb == 0.0 {
            return Ok(0.0);
        }
        let sw: f64 = subset.iter().map(|&j| self.within[j]).sum();
        let st: f64 = subset.iter().map(|&j| self.total[j]).sum();
        Ok(sb / sw.max(TRACE_FLOOR * st))
    }
}

/// Least-squares fit of the labels with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// `β₀` (intercept) followed by one slope per feature.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
    pub ssto: f64,
    /// `1 - SSE / SSTO`.
    pub r2: f64,
    /// The normal equations were singular and a ridge term was added.
    pub ridge: bool,
}

/// Solution of the standardized normal equations for one subset.
struct StandardSolution {
    /// Indices of the non-constant columns actually used.
    used: Vec<usize>,
    /// Standardized coefficients.
    gamma: DVector<f64>,
    /// Standardized feature-label correlations.
    r: DVector<f64>,
    ridge: bool,
}

/// Works on the correlation form `R γ = r` of the normal equations, built
/// from the covariance of the feature columns augmented with the labels.
struct RegressionScorer {
    /// Covariance of `[X | y]`; the label is the last row/column.
    cov: DMatrix<f64>,
    means: DVector<f64>,
    n: usize,
}

impl RegressionScorer {
    fn new(matrix: &LabeledFeatureMatrix) -> Result<Self> {
        matrix.require_both_classes()?;
        let (n, d) = (matrix.n_samples(), matrix.n_features());
        let x = matrix.values();
        let labels = matrix.labels();
        let aug = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[(i, j)] } else { labels[i] as f64 });
        let all: Vec<usize> = (0..n).collect();
        let means = linalg::column_means(&aug, &all);
        let cov = linalg::covariance(&aug, &all, &means);
        Ok(Self { cov, means, n })
    }

    fn d(&self) -> usize {
        self.cov.nrows() - 1
    }

    fn solve(&self, subset: &[usize]) -> Result<StandardSolution> {
        check_subset(subset, self.d())?;
        if self.n <= subset.len() + 1 {
            return Err(Error::Data(format!(
                "regression on {} features needs more than {} samples",
                subset.len(),
                subset.len() + 1
            )));
        }
        let y = self.d();
        // constant columns carry no information once the intercept is fitted
        let used: Vec<usize> = subset.iter().copied().filter(|&j| self.cov[(j, j)] > 0.0).collect();
        let k = used.len();
        let syy = self.cov[(y, y)];
        let sd: Vec<f64> = used.iter().map(|&j| self.cov[(j, j)].sqrt()).collect();
        let mut corr = DMatrix::from_fn(k, k, |a, b| {
            if a == b {
                1.0
            } else {
                self.cov[(used[a], used[b])] / (sd[a] * sd[b])
            }
        });
        let r = DVector::from_fn(k, |a, _| self.cov[(used[a], y)] / (sd[a] * syy.sqrt()));
        if k == 0 {
            return Ok(StandardSolution {
                used,
                gamma: DVector::zeros(0),
                r,
                ridge: false,
            });
        }
        let plain = SpdFactor::new(corr.clone(), "feature correlation matrix")
            .ok()
            .filter(|f| f.pivot_ratio() >= SINGULAR_PIVOT_RATIO);
        let (factor, ridge) = match plain {
            Some(f) => (f, false),
            None => {
                linalg::regularize(&mut corr);
                (SpdFactor::new(corr, "ridge-regularized correlation matrix")?, true)
            }
        };
        let gamma = factor.solve(&r);
        Ok(StandardSolution { used, gamma, r, ridge })
    }
}

impl SubsetScorer for RegressionScorer {
    fn n_features(&self) -> usize {
        self.d()
    }

    fn score(&self, subset: &[usize]) -> Result<f64> {
        let s = self.solve(subset)?;
        let r2 = s.r.dot(&s.gamma);
        if !r2.is_finite() {
            return Err(Error::Numeric("regression R² is not finite".into()));
        }
        Ok(r2.clamp(0.0, 1.0))
    }
}

/// Full least-squares fit with coefficients and residuals.
pub fn regression_fit(matrix: &LabeledFeatureMatrix) -> Result<RegressionFit> {
    let scorer = RegressionScorer::new(matrix)?;
    let d = matrix.n_features();
    let s = scorer.solve(&all_columns(matrix))?;
    let y = d;
    let sy = scorer.cov[(y, y)].sqrt();
    let mut slopes = vec![0.0; d];
    for (a, &j) in s.used.iter().enumerate() {
        slopes[j] = s.gamma[a] * sy / scorer.cov[(j, j)].sqrt();
    }
    let intercept = scorer.means[y] - slopes.iter().enumerate().map(|(j, b)| b * scorer.means[j]).sum::<f64>();
    let x = matrix.values();
    let ybar = scorer.means[y];
    let mut residuals = Vec::with_capacity(matrix.n_samples());
    let (mut sse, mut ssto) = (0.0, 0.0);
    for (i, &l) in matrix.labels().iter().enumerate() {
        let pred = intercept + (0..d).map(|j| slopes[j] * x[(i, j)]).sum::<f64>();
        let e = l as f64 - pred;
        residuals.push(e);
        sse += e * e;
        ssto += (l as f64 - ybar).powi(2);
    }
    let mut coefficients = vec![intercept];
    coefficients.extend(slopes);
    Ok(RegressionFit {
        coefficients,
        residuals,
        sse,
        ssto,
        r2: 1.0 - sse / ssto,
        ridge: s.ridge,
    })
}

struct MrmrScorer {
    bins: usize,
    exclude_self: bool,
    binned: Vec<Vec<usize>>,
    relevance: Vec<f64>,
    /// Lazily filled upper triangle of pairwise feature MI.
    pairs: Vec<OnceLock<f64>>,
}

impl MrmrScorer {
    fn new(matrix: &LabeledFeatureMatrix, bins: usize, exclude_self: bool) -> Result<Self> {
        matrix.require_both_classes()?;
        if bins == 0 || matrix.n_samples() < bins {
            return Err(Error::Config(format!(
                "{bins} bins need at least as many samples (got {})",
                matrix.n_samples()
            )));
        }
        let labels: Vec<usize> = matrix.labels().iter().map(|&l| l as usize).collect();
        let d = matrix.n_features();
        let binned: Vec<Vec<usize>> = (0..d).map(|j| discretize(&matrix.column(j), bins)).collect();
        let relevance = binned.iter().map(|b| mutual_information(b, bins, &labels, 2)).collect();
        Ok(Self {
            bins,
            exclude_self,
            binned,
            relevance,
            pairs: (0..d * d).map(|_| OnceLock::new()).collect(),
        })
    }

    fn pair(&self, i: usize, l: usize) -> f64 {
        let (a, b) = if i <= l { (i, l) } else { (l, i) };
        let d = self.binned.len();
        *self.pairs[a * d + b]
            .get_or_init(|| mutual_information(&self.binned[a], self.bins, &self.binned[b], self.bins))
    }
}

impl SubsetScorer for MrmrScorer {
    fn n_features(&self) -> usize {
        self.binned.len()
    }

    fn score(&self, subset: &[usize]) -> Result<f64> {
        check_subset(subset, self.n_features())?;
        let k = subset.len() as f64;
        let rel = subset.iter().map(|&j| self.relevance[j]).sum::<f64>() / k;
        let mut red = 0.0;
        for &i in subset {
            for &l in subset {
                if !(self.exclude_self && i == l) {
                    red += self.pair(i, l);
                }
            }
        }
        let pairs = if self.exclude_self { k * (k - 1.0) } else { k * k };
        let red = if pairs > 0.0 { red / pairs } else { 0.0 };
        Ok(rel - red)
    }
}
