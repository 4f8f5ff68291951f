//! Command-line front end for mental-task PSD feature-selection experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mentask::pipeline::{emit_tables, run_experiment, ExperimentConfig, Timing};
use mentask::signal::{synth_generate, write_dataset, SynthSpec};
use mentask::stats::{control_pvalues, friedman_test, posthoc_table, robust_rank, significance_report, ComparisonTable};

#[derive(Parser)]
#[command(name = "mentask", version, about = "PSD feature selection and classification experiments for mental-task EEG")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured combination and write the report tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Generate a synthetic dataset (manifest plus per-trial CSV files).
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Manifest path; trial files are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config and its dataset without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rank, Friedman test and post-hoc p-values for an external table.
    Stats {
        /// CSV with a `method` column followed by one column per evaluation unit.
        #[arg(long)]
        table: PathBuf,
        /// Control method; the best-ranked one when omitted.
        #[arg(long)]
        control: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

/// Finished normally but some combinations failed.
const EXIT_PARTIAL: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run { config, out, jobs } => run(&config, &out, jobs),
        Command::Synth { spec, seed, out } => synth(&spec, seed, &out),
        Command::Validate { config } => validate(&config),
        Command::Stats { table, control, alpha } => stats(&table, control.as_deref(), alpha),
    }
}

fn run(config: &Path, out: &Path, jobs: Option<usize>) -> Result<u8> {
    if jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    let cfg = ExperimentConfig::load(config)?;
    let start = Instant::now();
    let report = run_experiment(&cfg, jobs)?;
    emit_tables(&report, out).with_context(|| format!("writing results to {}", out.display()))?;
    Timing {
        total_seconds: start.elapsed().as_secs_f64(),
        jobs,
    }
    .write(out)?;
    println!(
        "{} combinations completed, {} failures; results in {}",
        report.completed_combinations(),
        report.failures.len(),
        out.display()
    );
    if let Some(p) = &report.posthoc {
        println!("control: {}", p.control);
    }
    if report.has_failures() {
        for f in &report.failures {
            eprintln!(
                "failed: {}/{}/{} {} {}: {}",
                f.subject,
                f.pair,
                f.extraction,
                f.selection.as_deref().unwrap_or("-"),
                f.classifier.as_deref().unwrap_or("-"),
                f.error
            );
        }
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn synth(spec_path: &Path, seed: u64, out: &Path) -> Result<u8> {
    let spec = SynthSpec::load(spec_path)?;
    let data = synth_generate(&spec, seed)?;
    write_dataset(&data, out)?;
    println!("{} trials written to {}", data.trials.len(), out.display());
    Ok(0)
}

fn validate(config: &Path) -> Result<u8> {
    let cfg = ExperimentConfig::load(config)?;
    let data = cfg.dataset.load()?;
    cfg.validate_with(&data)?;
    let units = data.subjects().len() * cfg.task_pairs.len() * cfg.extractions.len();
    println!(
        "ok: {} subjects, {} trials, {} units, {} selection × {} classifier combinations per unit",
        data.subjects().len(),
        data.trials.len(),
        units,
        cfg.selections.len(),
        cfg.classifiers.len()
    );
    Ok(0)
}

fn stats(table_path: &Path, control: Option<&str>, alpha: f64) -> Result<u8> {
    let table = ComparisonTable::load(table_path)?;
    let ranking = robust_rank(&table)?;
    let friedman = friedman_test(&table)?;
    let control = control.map_or_else(|| ranking.methods[ranking.ordering[0]].clone(), str::to_string);
    let posthoc = posthoc_table(&control, &control_pvalues(&friedman, &control)?)?;
    let flags = significance_report(&posthoc, alpha)?;
    println!("Friedman chi2 = {:.6}, df = {}, p = {:e}", friedman.statistic, friedman.df, friedman.p_value);
    println!();
    let mut out = std::io::stdout().lock();
    ranking.write_csv(&mut out)?;
    println!();
    posthoc.write_full_csv(&mut out)?;
    let significant: Vec<&str> = flags.iter().filter(|f| f.significant).map(|f| f.method.as_str()).collect();
    println!();
    println!("control {control}; {} of {} comparisons significant at alpha = {alpha}", significant.len(), flags.len());
    Ok(0)
}
