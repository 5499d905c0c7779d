//! Batch experiment runner: reproduces the reference datasets for the
//! collective-spin model with squeezed collective decay, from steady-state
//! scans to trajectory ensembles and emission spectra.

mod config;
mod experiments;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::{apply_overrides, Experiment, ExperimentConfig};
use export::{write_json, Failure, RunDir};

/// Deterministic datasets for a driven collective spin with squeezed
/// collective decay.
#[derive(Parser)]
#[command(name = "sslab", version, disable_help_subcommand = true)]
struct Cli {
    /// One of: phase-scan, gap, liouville-spectrum, mean-field-flow,
    /// trajectory-freezing, counting, tilted-scgf, emission, squeezing
    experiment: String,
    /// JSON configuration file; the experiment's preset applies when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for scans and trajectory ensembles
    #[arg(long)]
    jobs: Option<usize>,
    /// Output root, overriding the configured value
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Fixed run-directory name instead of a UTC timestamp
    #[arg(long)]
    stamp: Option<String>,
    /// key=value overrides applied to the configuration; values parse as
    /// JSON, falling back to strings (e.g. omega=1.2 n_spins=30)
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum CliError {
    /// Bad invocation or configuration: exit code 2.
    Usage(String),
    /// The experiment itself failed: exit code 1.
    Run(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("sslab: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("sslab: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let kind = Experiment::parse(&cli.experiment).ok_or_else(|| {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        CliError::Usage(format!(
            "unknown experiment `{}`; expected one of: {}",
            cli.experiment,
            names.join(", ")
        ))
    })?;

    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| {
                CliError::Usage(format!("cannot parse {}: {e}", path.display()))
            })?
        }
        None => ExperimentConfig::preset(kind),
    };
    cfg = apply_overrides(&cfg, &cli.overrides).map_err(CliError::Usage)?;
    if let Some(outdir) = &cli.outdir {
        cfg.outdir = outdir.clone();
    }
    cfg.validate(kind).map_err(CliError::Usage)?;

    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }

    let dir = RunDir::create(&cfg.outdir, kind.name(), cli.stamp.as_deref())
        .map_err(|e| CliError::Run(format!("cannot create the run directory: {e}")))?;
    write_json(&dir.path("config.json"), &cfg)
        .map_err(|e| CliError::Run(format!("cannot write config.json: {e}")))?;

    let started = chrono::Utc::now();
    let clock = Instant::now();
    let result = experiments::run(kind, &cfg, &dir);
    let wall = clock.elapsed().as_secs_f64();

    let (summary, failures, failed_hard) = match result {
        Ok(outcome) => {
            let hard = outcome.all_failed();
            (outcome.summary, outcome.failures, hard)
        }
        Err(e) => (
            json!(null),
            vec![Failure { point: json!(null), error: e }],
            true,
        ),
    };
    write_json(&dir.path("failures.json"), &failures)
        .map_err(|e| CliError::Run(format!("cannot write failures.json: {e}")))?;
    write_json(
        &dir.path("metadata.json"),
        &json!({
            "experiment": kind.name(),
            "stamp": dir.stamp,
            "version": concat!(env!("CARGO_PKG_VERSION"), " (", env!("BUILD_REV"), ")"),
            "started_utc": started.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "wall_time_s": wall,
            "base_seed": cfg.base_seed,
            "config": &cfg,
            "summary": summary,
            "n_failures": failures.len(),
        }),
    )
    .map_err(|e| CliError::Run(format!("cannot write metadata.json: {e}")))?;

    println!("{}", dir.root.display());
    if failed_hard {
        let first = failures.first().map(|f| f.error.as_str()).unwrap_or("unknown failure");
        return Err(CliError::Run(format!(
            "{} failed ({} failure{}): {first}",
            kind.name(),
            failures.len(),
            if failures.len() == 1 { "" } else { "s" },
        )));
    }
    if !failures.is_empty() {
        let total = summary.get("points").and_then(|p| p.as_u64()).unwrap_or(0);
        eprintln!("sslab: {} of {total} grid points failed; see failures.json", failures.len());
    }
    Ok(())
}
