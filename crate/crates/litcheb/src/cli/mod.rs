//! Command-line front end: config ingestion, moment generation, protocol
//! runs, and plot-ready CSV/JSON export.
//!
//! Exit codes: 0 success, 1 numerical-check failure, 2 configuration error.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::LitError;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "litcheb",
    version,
    about = "Response functions and bound-state spectra from Chebyshev moments via the Lorentz integral transform"
)]
struct Cli {
    /// Path to the run configuration file (flat key = value with [sections]).
    #[arg(short, long, global = true, default_value = "run.conf")]
    config: PathBuf,

    /// Worker threads (overrides the [run] threads key; 0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Protocol 1: prescan the bound spectrum and write the level table.
    Spectrum,
    /// Protocols 2-3: bound amplitudes, continuum inversion, round trip.
    Response,
    /// Emit the moment interchange file for offline post-processing.
    Moments,
    /// Run the cross-module invariant suite on the configured problem.
    Validate,
}

fn exit_code(err: &LitError) -> i32 {
    match err {
        LitError::Config(_) | LitError::Parse { .. } | LitError::Io(_) => 2,
        _ => 1,
    }
}

/// Parses arguments, runs the selected subcommand, and returns the process
/// exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let mut config = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if config.threads > 0 {
        // Ignore the error if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&config, &cli.config),
        Command::Response => commands::cmd_response(&config, &cli.config),
        Command::Moments => commands::cmd_moments(&config, &cli.config),
        Command::Validate => commands::cmd_validate(&config, &cli.config),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
