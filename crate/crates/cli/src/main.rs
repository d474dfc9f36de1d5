use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use flowar_core::experiment::{
    compare_runs, load_run, run_experiment, run_report, DatasetStore, ExperimentConfig, RunStatus,
};
use flowar_core::ingest::ingest_ordonez;
use flowar_core::model::{explore_stats, parse_timezone, save_uniform};
use serde::Serialize;

/// Activity recognition from binary smart-home sensors.
#[derive(Debug, Parser)]
#[command(name = "flowar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RawFormat {
    Ordonez,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert raw sensor and activity tables into a uniform dataset directory.
    Ingest {
        #[arg(long, value_enum)]
        format: RawFormat,
        #[arg(long)]
        sensors: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        name: String,
        /// IANA zone of the raw wall-clock timestamps, e.g. Europe/Madrid.
        #[arg(long)]
        tz: String,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute one experiment config and store the run.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory of uniform datasets, one per sub-directory.
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Run store root.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Summary, rendered trees and per-fold results of one run.
    Report {
        #[arg(long)]
        run: String,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        /// Include a comparison against this other run.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metric and config differences between two finished runs (b - a).
    Compare {
        a: String,
        b: String,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exploratory statistics of a dataset.
    Stats {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest { format: RawFormat::Ordonez, sensors, annotations, name, tz, out } => {
            let tz = parse_timezone(&tz).map_err(anyhow::Error::msg)?;
            let (dataset, report) = ingest_ordonez(&sensors, &annotations, &name, tz)?;
            save_uniform(&dataset, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {} row {}: {}", w.file, w.row, w.reason);
            }
            emit(&report, None)
        }
        Command::Run { config, data, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let config: ExperimentConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
            let record = run_experiment(&config, &DatasetStore::new(data), &out)?;
            emit(&record, None)?;
            if let RunStatus::Failed { reason } = &record.status {
                bail!("run {} failed: {} ({})", record.run_id, reason.message, reason.code);
            }
            Ok(())
        }
        Command::Report { run, runs, compare, out } => {
            let report = run_report(&runs, &run)?;
            let mut value = serde_json::to_value(&report)?;
            if let Some(other) = compare {
                let other = load_run(&runs, &other)?.record;
                value["comparison"] = serde_json::to_value(compare_runs(&report.record, &other)?)?;
            }
            emit(&value, out.as_deref())
        }
        Command::Compare { a, b, runs, out } => {
            let ra = load_run(&runs, &a)?.record;
            let rb = load_run(&runs, &b)?.record;
            emit(&compare_runs(&ra, &rb)?, out.as_deref())
        }
        Command::Stats { dataset, data, out } => {
            let ds = DatasetStore::new(data).load(&dataset)?;
            emit(&explore_stats(&ds), out.as_deref())
        }
        Command::Serve { addr, data, runs } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(flowar_service::serve(&addr, &data, &runs))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
