//! Comparisons against a control method and multiple-testing adjustment.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{csv_field, FriedmanResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosthocMethod {
    Holm,
    Hochberg,
    Hommel,
}

/// One method compared with the control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlComparison {
    pub method: String,
    pub z: f64,
    pub p: f64,
}

/// Two-sided normal p-values of `z = (R_j - R_control) / sqrt(k(k+1) / 6N)`
/// for every method other than the control, in table order.
pub fn control_pvalues(result: &FriedmanResult, control: &str) -> Result<Vec<ControlComparison>> {
    let c = result
        .methods
        .iter()
        .position(|m| m == control)
        .ok_or_else(|| Error::Config(format!("control method {control:?} is not in the table")))?;
    let k = result.methods.len() as f64;
    let se = (k * (k + 1.0) / (6.0 * result.n_columns as f64)).sqrt();
    Ok(result
        .methods
        .iter()
        .zip(&result.average_ranks)
        .enumerate()
        .filter(|&(j, _)| j != c)
        .map(|(_, (m, r))| {
            let z = (r - result.average_ranks[c]) / se;
            ControlComparison {
                method: m.clone(),
                z,
                p: erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0),
            }
        })
        .collect())
}

/// Adjusted p-values, returned in the input order.
pub fn posthoc_adjust(raw: &[f64], method: PosthocMethod) -> Result<Vec<f64>> {
    if let Some(p) = raw.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Range(format!("p-value {p} outside [0, 1]")));
    }
    let n = raw.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let p: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let sorted_adj = match method {
        PosthocMethod::Holm => {
            let mut run = 0.0f64;
            p.iter()
                .enumerate()
                .map(|(i, &v)| {
                    run = run.max(((n - i) as f64 * v).min(1.0));
                    run
                })
                .collect()
        }
        PosthocMethod::Hochberg => {
            let mut out = vec![0.0; n];
            let mut run = 1.0f64;
            for i in (0..n).rev() {
                run = run.min(((n - i) as f64 * p[i]).min(1.0));
                out[i] = run;
            }
            out
        }
        PosthocMethod::Hommel => hommel_sorted(&p),
    };
    let mut adj = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        adj[i] = sorted_adj[pos];
    }
    Ok(adj)
}

/// Hommel adjustment of ascending p-values.
fn hommel_sorted(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let simes = |m: usize, v: f64, j: usize| m as f64 * v / j as f64;
    let start = (0..n).map(|i| simes(n, p[i], i + 1)).fold(f64::INFINITY, f64::min);
    let mut q = vec![start; n];
    let mut pa = q.clone();
    for m in (2..n).rev() {
        // the first n - m + 1 sorted hypotheses, and the remaining m - 1
        let split = n - m + 1;
        let q1 = (split..n).map(|i| simes(m, p[i], i - split + 2)).fold(f64::INFINITY, f64::min);
        for i in 0..split {
            q[i] = simes(m, p[i], 1).min(q1);
        }
        for i in split..n {
            q[i] = q[split - 1];
        }
        for (a, b) in pa.iter_mut().zip(&q) {
            *a = a.max(*b);
        }
    }
    pa.iter().zip(p).map(|(a, b)| a.max(*b).min(1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocRow {
    pub method: String,
    pub z: f64,
    pub raw_p: f64,
    pub holm: f64,
    pub hochberg: f64,
    pub hommel: f64,
}

impl PosthocRow {
    pub fn adjusted(&self, method: PosthocMethod) -> f64 {
        match method {
            PosthocMethod::Holm => self.holm,
            PosthocMethod::Hochberg => self.hochberg,
            PosthocMethod::Hommel => self.hommel,
        }
    }
}

/// Post-hoc comparisons against a control, sorted by raw p (then name).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocResult {
    pub control: String,
    pub rows: Vec<PosthocRow>,
}

/// Builds the adjusted comparison table from raw comparisons.
pub fn posthoc_table(control: &str, comparisons: &[ControlComparison]) -> Result<PosthocResult> {
    let raw: Vec<f64> = comparisons.iter().map(|c| c.p).collect();
    let holm = posthoc_adjust(&raw, PosthocMethod::Holm)?;
    let hochberg = posthoc_adjust(&raw, PosthocMethod::Hochberg)?;
    let hommel = posthoc_adjust(&raw, PosthocMethod::Hommel)?;
    let mut rows: Vec<PosthocRow> = comparisons
        .iter()
        .enumerate()
        .map(|(i, c)| PosthocRow {
            method: c.method.clone(),
            z: c.z,
            raw_p: c.p,
            holm: holm[i],
            hochberg: hochberg[i],
            hommel: hommel[i],
        })
        .collect();
    rows.sort_by(|a, b| a.raw_p.total_cmp(&b.raw_p).then_with(|| a.method.cmp(&b.method)));
    Ok(PosthocResult {
        control: control.to_string(),
        rows,
    })
}

impl PosthocResult {
    /// `combination,unadjusted p,p Homm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "combination,unadjusted p,p Homm")?;
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e}", csv_field(&r.method), r.raw_p, r.hommel)?;
        }
        Ok(())
    }

    /// All three adjustments plus the z statistic.
    pub fn write_full_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "combination,z,unadjusted p,p Holm,p Hochberg,p Homm")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e}",
                csv_field(&r.method),
                r.z,
                r.raw_p,
                r.holm,
                r.hochberg,
                r.hommel
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceFlag {
    pub method: String,
    pub adjusted_p: f64,
    pub significant: bool,
}

/// Flags each comparison whose Hommel-adjusted p is below `alpha`.
pub fn significance_report(posthoc: &PosthocResult, alpha: f64) -> Result<Vec<SignificanceFlag>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(posthoc
        .rows
        .iter()
        .map(|r| SignificanceFlag {
            method: r.method.clone(),
            adjusted_p: r.hommel,
            significant: r.hommel < alpha || alpha == 1.0,
        })
        .collect())
}
