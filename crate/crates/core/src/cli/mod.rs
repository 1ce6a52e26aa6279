//! Command-line front end.
//!
//! Exit codes: 0 success, 1 oracle failure, 2 configuration error, 3 I/O
//! error.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::run;
pub use config::RunConfig;

use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "qbm-sbs", version, about = "Decoherence and broadcast-structure simulator for an oscillator coupled to a bath")]
pub struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// |Γ(t)| and B(t) on a uniform time grid for one realization.
    Timeseries,
    /// Ensemble time averages over a log-spaced temperature grid.
    Sweep,
    /// Fock-space check of the closed-form single-mode factors.
    Oracle,
    /// Momentum against position squeezing of the central oscillator.
    CompareSqueezing {
        /// Restrict to the momentum axis (rejected: the comparison needs both).
        #[arg(long)]
        momentum_only: bool,
        /// Restrict to the position axis (rejected: the comparison needs both).
        #[arg(long)]
        position_only: bool,
    },
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Timeseries => "timeseries",
            Command::Sweep => "sweep",
            Command::Oracle => "oracle",
            Command::CompareSqueezing { .. } => "compare-squeezing",
        }
    }
}

/// Process exit status of an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        Error::LinAlg(_) => 1,
        Error::Config(_)
        | Error::Domain(_)
        | Error::Resonance { .. }
        | Error::Truncation { .. }
        | Error::DimensionMismatch(..) => 2,
    }
}

/// Resolves the configuration from defaults, the config file, `--set`
/// overrides and the dedicated flags, in that order.
pub fn resolve(cli: &Cli) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_text(&text)?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    let result = resolve(&cli).and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
