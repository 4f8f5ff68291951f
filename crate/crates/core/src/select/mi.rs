//! Plug-in mutual information on equal-width bins.

/// `ceil(sqrt(n))`, capped at 32 and at least 1.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, 32)
}

/// Equal-width bin index of each value over the observed `[min, max]`.
///
/// A constant input maps entirely to bin 0.
pub fn discretize(x: &[f64], bins: usize) -> Vec<usize> {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) || bins <= 1 {
        return vec![0; x.len()];
    }
    x.iter()
        .map(|&v| (((v - min) / span * bins as f64) as usize).min(bins - 1))
        .collect()
}

/// `Σ p(a,b) ln(p(a,b) / (p(a) p(b)))` in nats for two discrete sequences.
///
/// The cell terms are summed in sorted order so that `I(a;b)` and `I(b;a)`
/// are bit-identical.
pub fn mutual_information(a: &[usize], a_levels: usize, b: &[usize], b_levels: usize) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut joint = vec![0usize; a_levels * b_levels];
    let mut ca = vec![0usize; a_levels];
    let mut cb = vec![0usize; b_levels];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * b_levels + j] += 1;
        ca[i] += 1;
        cb[j] += 1;
    }
    let nf = n as f64;
    let mut terms: Vec<f64> = Vec::new();
    for i in 0..a_levels {
        for j in 0..b_levels {
            let c = joint[i * b_levels + j];
            if c > 0 {
                let c = c as f64;
                terms.push(c / nf * (c * nf / (ca[i] as f64 * cb[j] as f64)).ln());
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().max(0.0)
}
