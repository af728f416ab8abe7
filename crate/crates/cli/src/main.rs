//! Command-line driver: experiment configuration, parallel Monte Carlo,
//! persistence of results and plot-data emission.
//!
//! Exit codes: 0 success, 1 check failed, 2 usage error, 3 numerical failure,
//! 4 I/O failure.

mod commands;
mod config;
mod error;
mod output;
mod parse;
mod runner;

use clap::{Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "weaknh",
    version,
    about = "Weakly non-Hermitian random matrix ensembles: sampling, diagnostics, kernels and Monte Carlo verification"
)]
struct Cli {
    /// Master seed for all RNG streams (per-trial substreams are derived from it).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte Carlo; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// TOML config file; command-line flags override config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw matrices from an ensemble; write matrix and/or eigenvalue CSVs.
    Sample(commands::sample::SampleArgs),
    /// Draw matrices and write only the eigenvalue CSV.
    Spectrum(commands::sample::SpectrumArgs),
    /// Check the spectral-domain conditions C0-C3 for a (W1, W2) pair.
    CheckClass(commands::check_class::CheckClassArgs),
    /// Solve the fixed point lambda = E + t m(lambda) and report tau_{E,t}.
    Saddle(commands::saddle::SaddleArgs),
    /// Evaluate the bulk kernel: rho_1 on a grid (CSV) or a kernel matrix (JSON).
    Kernel(commands::kernel::KernelArgs),
    /// Monte Carlo pipeline: sample, rescale, bin and compare against the kernel.
    Correlate(commands::correlate::CorrelateArgs),
    /// Compare a stored binned estimate against the kernel prediction.
    Compare(commands::compare::CompareArgs),
    /// Reverse-heat-flow demo: chi^2 divergence of e^{tL} T_n f against f.
    Heatflow(commands::heatflow::HeatflowArgs),
}

/// Global options after merging flags with the config file.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Globals {
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::load(cli.config.as_deref())?;
    let globals = Globals {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        workers: cli.workers.or(file.workers).unwrap_or(1).max(1),
        out: cli
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
    };
    std::fs::create_dir_all(&globals.out)
        .map_err(|e| CliError::Io(format!("cannot create output directory: {e}")))?;

    match cli.command {
        Command::Sample(args) => commands::sample::run(&globals, &file, args),
        Command::Spectrum(args) => commands::sample::run_spectrum(&globals, &file, args),
        Command::CheckClass(args) => commands::check_class::run(&globals, &file, args),
        Command::Saddle(args) => commands::saddle::run(&globals, &file, args),
        Command::Kernel(args) => commands::kernel::run(&globals, &file, args),
        Command::Correlate(args) => commands::correlate::run(&globals, &file, args),
        Command::Compare(args) => commands::compare::run(&globals, &file, args),
        Command::Heatflow(args) => commands::heatflow::run(&globals, &file, args),
    }
}
