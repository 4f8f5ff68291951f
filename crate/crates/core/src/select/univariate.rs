use serde::{Deserialize, Serialize};

use super::mi::{default_bins, discretize, mutual_information};
use super::{Criterion, LabeledFeatureMatrix};
use crate::error::{Error, Result};
use crate::signal::Label;

/// Score of one feature under a univariate criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature_index: usize,
    /// Value used for ranking (|CORR| for correlation, the raw value otherwise).
    pub score: f64,
    /// Signed criterion value.
    pub raw: f64,
    pub criterion: String,
    /// The criterion was undefined for this feature; `score` is 0 and it ranks last.
    pub degenerate: bool,
}

fn check_lengths(feature: &[f64], labels: &[Label]) -> Result<()> {
    if feature.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} feature values but {} labels",
            feature.len(),
            labels.len()
        )));
    }
    Ok(())
}

fn split(feature: &[f64], labels: &[Label]) -> [Vec<f64>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (&v, &l) in feature.iter().zip(labels) {
        out[l as usize].push(v);
    }
    out
}

/// Pearson correlation between a feature and the 0/1 labels.
pub fn corr_score(feature: &[f64], labels: &[Label]) -> Result<f64> {
    check_lengths(feature, labels)?;
    let n = feature.len() as f64;
    let mx = feature.iter().sum::<f64>() / n;
    let my = labels.iter().map(|&l| l as f64).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &l) in feature.iter().zip(labels) {
        let dx = x - mx;
        let dy = l as f64 - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::Degenerate("correlation undefined for zero-variance input".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mutual information (nats) between the equal-width binned feature and the labels.
pub fn mi_score(feature: &[f64], labels: &[Label], bins: usize) -> Result<f64> {
    check_lengths(feature, labels)?;
    if bins == 0 || feature.len() < bins {
        return Err(Error::Config(format!(
            "{bins} bins need at least as many samples (got {})",
            feature.len()
        )));
    }
    let binned = discretize(feature, bins);
    let lab: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    Ok(mutual_information(&binned, bins, &lab, 2))
}

/// `(μ₁ - μ₂)² / (σ₁² + σ₂²)` with unbiased class variances.
pub fn fdr_score(feature: &[f64], labels: &[Label]) -> Result<f64> {
    check_lengths(feature, labels)?;
    let [a, b] = split(feature, labels);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Data("FDR needs at least two samples per class".into()));
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, var)
    };
    let (m1, v1) = stats(&a);
    let (m2, v2) = stats(&b);
    let num = (m1 - m2) * (m1 - m2);
    let den = v1 + v2;
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Degenerate(
            "both classes have zero variance and different means (infinite FDR)".into(),
        ));
    }
    Ok(num / den)
}

/// Rank-sum statistic `t` (pairs with class-0 value ≤ class-1 value) and
/// relevance `max(t, N₀N₁ - t)`.
pub fn ranksum_statistic(feature: &[f64], labels: &[Label]) -> Result<(u64, u64)> {
    check_lengths(feature, labels)?;
    let [a, mut b] = split(feature, labels);
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("rank-sum needs both classes".into()));
    }
    b.sort_by(f64::total_cmp);
    let t: u64 = a
        .iter()
        .map(|&x| (b.len() - b.partition_point(|&y| y < x)) as u64)
        .sum();
    let total = a.len() as u64 * b.len() as u64;
    Ok((t, t.max(total - t)))
}

pub fn ranksum_score(feature: &[f64], labels: &[Label]) -> Result<f64> {
    ranksum_statistic(feature, labels).map(|(_, r)| r as f64)
}

fn univariate_value(criterion: &Criterion, feature: &[f64], labels: &[Label]) -> Result<(f64, f64)> {
    match criterion {
        Criterion::Corr => corr_score(feature, labels).map(|c| (c.abs(), c)),
        Criterion::Mi { bins } => {
            mi_score(feature, labels, bins.unwrap_or_else(|| default_bins(labels.len()))).map(|v| (v, v))
        }
        Criterion::Fdr => fdr_score(feature, labels).map(|v| (v, v)),
        Criterion::Ranksum => ranksum_score(feature, labels).map(|v| (v, v)),
        other => Err(Error::Config(format!("{other} is not a univariate criterion"))),
    }
}

/// Scores every feature and returns the top `cap` in descending order.
///
/// Ties go to the lower feature index; degenerate features score 0 and sort last.
pub fn rank_univariate(matrix: &LabeledFeatureMatrix, criterion: &Criterion, cap: usize) -> Result<Vec<FeatureScore>> {
    if cap == 0 {
        return Err(Error::Config("cap must be at least 1".into()));
    }
    if !criterion.is_univariate() {
        return Err(Error::Config(format!("{criterion} is not a univariate criterion")));
    }
    matrix.require_both_classes()?;
    let labels = matrix.labels();
    let mut scores = Vec::with_capacity(matrix.n_features());
    for j in 0..matrix.n_features() {
        let col = matrix.column(j);
        let (score, raw, degenerate) = match univariate_value(criterion, &col, labels) {
            Ok((s, r)) => (s, r, false),
            Err(e @ (Error::Degenerate(_) | Error::Data(_))) => {
                log::debug!("feature {j}: {criterion} undefined ({e}); ranked last");
                (0.0, 0.0, true)
            }
            Err(e) => return Err(e),
        };
        scores.push(FeatureScore {
            feature_index: j,
            score,
            raw,
            criterion: criterion.name().to_string(),
            degenerate,
        });
    }
    scores.sort_by(|a, b| {
        a.degenerate
            .cmp(&b.degenerate)
            .then(b.score.total_cmp(&a.score))
            .then(a.feature_index.cmp(&b.feature_index))
    });
    scores.truncate(cap);
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn corr_self_and_known_value() {
        let labels = [1u8, 0, 1, 0];
        let as_f: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        assert!((corr_score(&as_f, &labels).unwrap() - 1.0).abs() < 1e-15);
        // mean f = 2.5, mean c = 0.5; sxy = -1, sxx = 5, syy = 1 -> -1/sqrt(5)
        let v = corr_score(&[1.0, 2.0, 3.0, 4.0], &labels).unwrap();
        assert!((v + 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((v + 0.4472).abs() < 1e-4);
    }

    #[test]
    fn corr_independent_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let l: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        assert!(corr_score(&f, &l).unwrap().abs() < 0.05);
    }

    #[test]
    fn corr_constant_is_degenerate() {
        assert!(matches!(corr_score(&[1.0; 4], &[0, 1, 0, 1]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mi_copy_of_labels_is_ln2() {
        let l: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let f: Vec<f64> = l.iter().map(|&v| v as f64).collect();
        assert!((mi_score(&f, &l, 10).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mi_independent_is_small_and_constant_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let l: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        assert!(mi_score(&f, &l, default_bins(10_000)).unwrap() < 0.01);
        assert_eq!(mi_score(&[2.0; 10], &l[..10], 3).unwrap(), 0.0);
        assert!(matches!(mi_score(&[1.0, 2.0], &[0, 1], 3), Err(Error::Config(_))));
    }

    #[test]
    fn fdr_known_values() {
        // class 0: mean 0 var 1, class 1: mean 2 var 1
        let f = [-1.0, 0.0, 1.0, 1.0, 2.0, 3.0];
        let l = [0, 0, 0, 1, 1, 1];
        assert!((fdr_score(&f, &l).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(fdr_score(&[1.0, 2.0, 1.0, 2.0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(fdr_score(&[1.0, 1.0, 1.0, 1.0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(matches!(fdr_score(&[1.0, 1.0, 2.0, 2.0], &[0, 0, 1, 1]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ranksum_examples() {
        assert_eq!(ranksum_statistic(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]).unwrap(), (4, 4));
        assert_eq!(ranksum_statistic(&[3.0, 4.0, 1.0, 2.0], &[0, 0, 1, 1]).unwrap(), (0, 4));
        assert_eq!(ranksum_statistic(&[5.0, 5.0], &[0, 1]).unwrap(), (1, 1));
    }

    #[test]
    fn ranking_puts_label_copy_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 60;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = DMatrix::from_fn(n, 30, |i, j| if j == 17 { labels[i] as f64 } else { rng.random::<f64>() });
        let m = LabeledFeatureMatrix::new(x, labels).unwrap();
        let r = rank_univariate(&m, &Criterion::Corr, 25).unwrap();
        assert_eq!(r.len(), 25);
        assert_eq!(r[0].feature_index, 17);
        assert!(r.windows(2).all(|w| w[0].score >= w[1].score));
        assert_eq!(rank_univariate(&m, &Criterion::Fdr, 100).unwrap().len(), 30);
    }

    #[test]
    fn degenerate_features_rank_last() {
        let labels = vec![0, 1, 0, 1, 0, 1];
        let x = DMatrix::from_fn(6, 3, |i, j| match j {
            0 => 4.0,
            1 => i as f64,
            _ => (i * i) as f64,
        });
        let m = LabeledFeatureMatrix::new(x, labels).unwrap();
        let r = rank_univariate(&m, &Criterion::Corr, 3).unwrap();
        assert_eq!(r[2].feature_index, 0);
        assert!(r[2].degenerate && r[2].score == 0.0);
    }

    #[test]
    fn ties_break_by_index() {
        let labels = vec![0, 1, 0, 1];
        let x = DMatrix::from_fn(4, 3, |i, _| i as f64);
        let m = LabeledFeatureMatrix::new(x, labels).unwrap();
        let r = rank_univariate(&m, &Criterion::Ranksum, 3).unwrap();
        assert_eq!(r.iter().map(|s| s.feature_index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    fn feature_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (8usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(0u8..2, n).prop_filter("two classes with >=2 each", |l| {
                    let ones = l.iter().filter(|&&v| v == 1).count();
                    ones >= 2 && l.len() - ones >= 2
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn corr_bounded_and_affine_invariant((f, l) in feature_and_labels(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
            if let Ok(c) = corr_score(&f, &l) {
                prop_assert!((-1.0..=1.0).contains(&c));
                let g: Vec<f64> = f.iter().map(|v| v * scale + shift).collect();
                prop_assert!((corr_score(&g, &l).unwrap() - c).abs() < 1e-9);
                let h: Vec<f64> = f.iter().map(|v| -v * scale).collect();
                prop_assert!((corr_score(&h, &l).unwrap() + c).abs() < 1e-9);
            }
        }

        #[test]
        fn scores_invariant_under_increasing_affine((f, l) in feature_and_labels(), k in -3i32..4, shift in -8i32..8) {
            let scale = 2f64.powi(k);
            let g: Vec<f64> = f.iter().map(|v| v * scale + shift as f64 * 0.5).collect();
            let fdr = fdr_score(&f, &l).unwrap();
            prop_assert!((fdr_score(&g, &l).unwrap() - fdr).abs() <= 1e-9 * fdr.max(1e-12));
            prop_assert_eq!(ranksum_score(&g, &l).unwrap(), ranksum_score(&f, &l).unwrap());
            let bins = default_bins(f.len());
            let scaled: Vec<f64> = f.iter().map(|v| v * scale).collect();
            prop_assert_eq!(mi_score(&scaled, &l, bins).unwrap(), mi_score(&f, &l, bins).unwrap());
        }

        #[test]
        fn ranksum_invariant_under_monotone_transform((f, l) in feature_and_labels()) {
            let g: Vec<f64> = f.iter().map(|v| v.powi(3) + v).collect();
            prop_assert_eq!(ranksum_score(&g, &l).unwrap(), ranksum_score(&f, &l).unwrap());
            let (t, r) = ranksum_statistic(&f, &l).unwrap();
            let ones = l.iter().filter(|&&v| v == 1).count() as u64;
            let total = ones * (l.len() as u64 - ones);
            prop_assert!(t <= total && r >= total.div_ceil(2) && r <= total);
        }
    }
}
