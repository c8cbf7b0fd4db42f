//! `mflab`: batch front end for solves, Γ-sweeps, transport and penalty checks.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::LoadedConfig;
use output::{OutputDir, Provenance};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{failed} of {total} sweep entries failed")]
    PartialSweep { failed: usize, total: usize },
    #[error(transparent)]
    Failure(#[from] anyhow::Error),
}

impl From<mflab::Error> for CliError {
    fn from(e: mflab::Error) -> Self {
        Self::Failure(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Failure(_) => 1,
            Self::PartialSweep { .. } => 2,
            Self::Config(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "mflab", version, about = "Finite-N optimal control of interacting agents and its mean-field limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize μ₀, solve the N-agent problem and check residuals and moments.
    Solve(RunArgs),
    /// Solve over a schedule of N and record the convergence diagnostics.
    Sweep(RunArgs),
    /// Optimal transport cost and plan between two measure CSV files.
    Transport(RunArgs),
    /// Certify a penalty and its reference function.
    PenaltyCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(command: Command) -> Result<(), CliError> {
    let (args, kind) = match &command {
        Command::Solve(a) => (a, "solve"),
        Command::Sweep(a) => (a, "sweep"),
        Command::Transport(a) => (a, "transport"),
        Command::PenaltyCheck(a) => (a, "penalty-check"),
    };
    let mut loaded = LoadedConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        loaded.config.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(anyhow::Error::from)?;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| loaded.resolve(&loaded.config.output_dir));
    log::info!("{kind}: config {} (sha256 {}), seed {}", args.config.display(), loaded.sha256, loaded.config.seed);
    let provenance = Provenance {
        config_sha256: loaded.sha256.clone(),
        seed: loaded.config.seed,
    };
    match command {
        Command::Solve(_) => commands::solve::run(&loaded, || OutputDir::create(out_dir, provenance)),
        Command::Sweep(_) => commands::sweep::run(&loaded, || OutputDir::create(out_dir, provenance)),
        Command::Transport(_) => commands::transport::run(&loaded, || OutputDir::create(out_dir, provenance)),
        Command::PenaltyCheck(_) => commands::penalty_check::run(&loaded, || OutputDir::create(out_dir, provenance)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
