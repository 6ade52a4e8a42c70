use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use maobo_cli::config::ExperimentConfig;
use maobo_cli::experiment::{run_sweep, write_sweep};
use maobo_cli::{plotdata, study};
use maobo_core::bo::run;
use maobo_core::report::write_run;

#[derive(Parser)]
#[command(name = "maobo", version, about = "Many-objective Bayesian optimization with objective reduction")]
struct Cli {
    /// Increase log verbosity (-v info, -vv per-iteration detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed (the seed list, for sweeps).
    #[arg(long)]
    seed: Option<u64>,
    /// Disable objective reduction (baseline runs only, for sweeps).
    #[arg(long)]
    no_reduction: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and write its artifacts.
    Run(RunArgs),
    /// Run the delta_start × epsilon × seed grid and write table.csv.
    Sweep(RunArgs),
    /// Compare GPs fit to pairs of analytic functions.
    Similarity {
        /// Optional TOML overriding the study settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "similarity")]
        out: PathBuf,
        /// Run a single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn a run directory into plot-ready CSV files.
    Plotdata {
        /// Directory containing trace.json.
        run: PathBuf,
        /// Defaults to RUN/plotdata.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &RunArgs) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
        config.sweep.seeds = vec![seed];
    }
    if args.no_reduction {
        config.reduction = false;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn run_one(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let (config, out) = load(args)?;
    let result = run(&config.run_config()?)?;
    write_run(&out, &result).with_context(|| format!("writing artifacts to {}", out.display()))?;
    log::info!("hypervolume {:.6e}, artifacts in {}", result.hypervolume, out.display());
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let (config, out) = load(args)?;
    let outcome = run_sweep(&config, args.no_reduction)?;
    let table = write_sweep(&out, &outcome)?;
    log::info!("wrote {}", table.display());
    let failed = outcome.failures();
    if failed > 0 {
        for c in outcome.cells.iter().filter(|c| c.result.is_err()) {
            eprintln!("cell {} failed: {}", c.cell, c.result.as_ref().unwrap_err());
        }
        eprintln!("{failed} of {} cells failed", outcome.cells.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn similarity(config: Option<&Path>, out: &Path, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let mut cfg = match config {
        Some(p) => study::load_study_config(p)?,
        None => study::StudyConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let rows = study::run_study(&study::default_pairs(), &cfg)?;
    study::write_study(out, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .init();

    let outcome = match &cli.command {
        Command::Run(args) => run_one(args),
        Command::Sweep(args) => sweep(args),
        Command::Similarity { config, out, seed } => similarity(config.as_deref(), out, *seed),
        Command::Plotdata { run, out } => {
            let out = out.clone().unwrap_or_else(|| run.join("plotdata"));
            plotdata::emit(run, &out).map(|files| {
                log::info!("wrote {} files to {}", files.len(), out.display());
                ExitCode::SUCCESS
            })
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
