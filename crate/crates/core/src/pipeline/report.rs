//! Report files: JSON report, CSV tables and plot-ready accuracy curves.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{method_name, RunReport};
use crate::error::{Error, Result};
use crate::signal::write_atomic;
use crate::stats::csv_field;

/// Wall-clock figures, kept out of `report.json` so that the report is
/// byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub jobs: Option<usize>,
}

impl Timing {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("timing JSON: {e}")))?;
        write_atomic(&dir.join("timing.json"), format!("{json}\n").as_bytes())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn file_stem(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| {
            p.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("_")
}

fn ranking_csv(report: &RunReport) -> String {
    let mut s = String::from("combination,average_rank\n");
    if let Some(r) = &report.ranking {
        for &i in &r.ordering {
            let _ = writeln!(s, "{},{}", csv_field(&r.methods[i]), r.average_ranks[i]);
        }
    }
    s
}

fn posthoc_csvs(report: &RunReport) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut short = Vec::new();
    let mut full = Vec::new();
    let io = |e: std::io::Error| Error::Numeric(format!("formatting post-hoc table: {e}"));
    match &report.posthoc {
        Some(p) => {
            p.write_csv(&mut short).map_err(io)?;
            p.write_full_csv(&mut full).map_err(io)?;
        }
        None => {
            short.extend_from_slice(b"combination,unadjusted p,p Homm\n");
            full.extend_from_slice(b"combination,z,unadjusted p,p Holm,p Hochberg,p Homm\n");
        }
    }
    Ok((short, full))
}

fn significance_csv(report: &RunReport) -> String {
    let mut s = String::from("combination,adjusted_p,significant\n");
    for f in &report.significance {
        let _ = writeln!(s, "{},{:e},{}", csv_field(&f.method), f.adjusted_p, f.significant);
    }
    s
}

fn gains_csv(report: &RunReport) -> String {
    let mut s = String::from("subject,pair,extraction,selection,classifier,baseline_accuracy,best_accuracy,best_k,gain,error\n");
    for u in &report.units {
        for c in &u.combinations {
            let baseline = u.baselines.iter().find(|b| b.classifier == c.classifier).and_then(|b| b.accuracy);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                csv_field(&u.subject),
                u.pair,
                u.extraction,
                c.selection,
                c.classifier,
                opt(baseline),
                opt(c.report.as_ref().map(|r| r.best_accuracy)),
                c.report.as_ref().map(|r| r.best_k.to_string()).unwrap_or_default(),
                opt(c.gain),
                csv_field(c.error.as_deref().unwrap_or("")),
            );
        }
    }
    s
}

fn baselines_csv(report: &RunReport) -> String {
    let mut s = String::from("subject,pair,extraction,classifier,accuracy,error\n");
    for u in &report.units {
        if let Some(e) = &u.error {
            let _ = writeln!(s, "{},{},{},,,{}", csv_field(&u.subject), u.pair, u.extraction, csv_field(e));
        }
        for b in &u.baselines {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                csv_field(&u.subject),
                u.pair,
                u.extraction,
                b.classifier,
                opt(b.accuracy),
                csv_field(b.error.as_deref().unwrap_or(""))
            );
        }
    }
    s
}

fn summary_csv(report: &RunReport) -> String {
    let mut s = String::from("combination,extraction,selection,classifier,cells,mean_best_accuracy,mean_baseline_accuracy,mean_gain\n");
    for r in &report.summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            csv_field(&method_name(&r.selection, &r.extraction)),
            r.extraction,
            r.selection,
            r.classifier,
            r.cells,
            opt(r.mean_best_accuracy),
            opt(r.mean_baseline_accuracy),
            opt(r.mean_gain)
        );
    }
    s
}

/// One file per (extraction, selection, classifier): `k`, the cell average
/// and one column per `<subject>/<pair>` cell.
fn accuracy_curves(report: &RunReport) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for row in &report.summary {
        let cells: Vec<(String, &Vec<f64>)> = report
            .units
            .iter()
            .filter(|u| u.extraction == row.extraction)
            .flat_map(|u| {
                u.combinations
                    .iter()
                    .filter(|c| c.selection == row.selection && c.classifier == row.classifier)
                    .filter_map(move |c| c.report.as_ref().map(|r| (format!("{}/{}", u.subject, u.pair), &r.curve)))
            })
            .collect();
        let len = cells.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
        let mut s = String::from("k,mean_accuracy");
        for (name, _) in &cells {
            let _ = write!(s, ",{}", csv_field(name));
        }
        s.push('\n');
        for k in 0..len {
            let present: Vec<f64> = cells.iter().filter_map(|(_, c)| c.get(k).copied()).collect();
            let avg = present.iter().sum::<f64>() / present.len() as f64;
            let _ = write!(s, "{},{avg}", k + 1);
            for (_, c) in &cells {
                let _ = write!(s, ",{}", opt(c.get(k).copied()));
            }
            s.push('\n');
        }
        files.push((format!("{}.csv", file_stem(&[&row.extraction, &row.selection, &row.classifier])), s));
    }
    files
}

/// Report as pretty JSON with a trailing newline.
pub fn report_json(report: &RunReport) -> Result<String> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Numeric(format!("report JSON: {e}")))?;
    Ok(format!("{json}\n"))
}

/// Writes every report file into `dir`, replacing existing ones atomically.
pub fn emit_tables(report: &RunReport, dir: &Path) -> Result<()> {
    let curves_dir = dir.join("accuracy_curves");
    fs::create_dir_all(&curves_dir).map_err(|e| Error::io(&curves_dir, e))?;
    write_atomic(&dir.join("report.json"), report_json(report)?.as_bytes())?;
    write_atomic(&dir.join("ranking.csv"), ranking_csv(report).as_bytes())?;
    let (short, full) = posthoc_csvs(report)?;
    write_atomic(&dir.join("posthoc.csv"), &short)?;
    write_atomic(&dir.join("posthoc_full.csv"), &full)?;
    write_atomic(&dir.join("significance.csv"), significance_csv(report).as_bytes())?;
    write_atomic(&dir.join("gains.csv"), gains_csv(report).as_bytes())?;
    write_atomic(&dir.join("baselines.csv"), baselines_csv(report).as_bytes())?;
    write_atomic(&dir.join("summary.csv"), summary_csv(report).as_bytes())?;
    if let Some(t) = &report.gain_table {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        write_atomic(&dir.join("gain_table.csv"), &buf)?;
    }
    for (name, body) in accuracy_curves(report) {
        write_atomic(&curves_dir.join(name), body.as_bytes())?;
    }
    Ok(())
}
