//! Experiment runner CLI.
//!
//! Usage:
//!   oplab run risk-curve --config configs/finite_dim_d1.toml --out runs/fd1
//!   oplab run lower-bound --config configs/lower_bound_exp.toml
//!   oplab run rates --config configs/rates_exp_overlay.toml --override rates.points=80
//!   oplab run verify
//!
//! The default output directory is `runs/<kind>` or the OPLAB_OUT
//! environment variable. Identical config and seed give byte-identical CSV
//! artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oplab_core::config::{ExperimentConfig, ExperimentKind};
use oplab_core::runner;

#[derive(Parser)]
#[command(name = "oplab", version, about = "Operator-regression laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment kind: risk-curve | lower-bound | rates | verify.
    kind: String,
    /// TOML config path (optional for `verify`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: $OPLAB_OUT or runs/<kind>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config override, key=value with dotted paths; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(failures) if failures == 0 => ExitCode::SUCCESS,
            Ok(failures) => {
                eprintln!("{failures} check(s) failed");
                ExitCode::FAILURE
            }
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(2)
            }
        },
    }
}

fn run(args: RunArgs) -> oplab_core::Result<usize> {
    let kind = ExperimentKind::parse(&args.kind)?;
    let mut overrides: Vec<(String, String)> = Vec::new();
    for item in &args.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            oplab_core::Error::Config(format!("override '{item}' is not key=value"))
        })?;
        overrides.push((key.to_string(), value.to_string()));
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }

    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::from_toml(&text, &overrides)?
        }
        None if kind == ExperimentKind::Verify => {
            let seed = args.seed.unwrap_or(0);
            ExperimentConfig::from_toml(&format!("kind = \"verify\"\nseed = {seed}\n"), &[])?
        }
        None => {
            return Err(oplab_core::Error::Config(format!(
                "experiment kind '{}' needs --config",
                kind.name()
            )))
        }
    };
    if config.kind != kind {
        return Err(oplab_core::Error::Config(format!(
            "config declares kind '{}' but the command line asked for '{}'",
            config.kind.name(),
            kind.name()
        )));
    }

    let out_dir = args
        .out
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("OPLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(kind.name()));

    let outcome = runner::run(&config, &out_dir, args.workers)?;
    for artifact in &outcome.artifacts {
        println!("wrote {}", artifact.display());
    }
    Ok(outcome.failures)
}
