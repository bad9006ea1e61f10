//! Command-line front end: argument parsing, config files, exit codes and
//! run manifests around the `morrey_sparse` library.

mod commands;
mod config;
mod manifest;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use morrey_sparse::Error;

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SCHEDULING: i32 = 4;

pub const THREADS_ENV: &str = "MORREY_SPARSE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "morrey-sparse", version, about = "Morrey norms, sparseness and NSE regularity diagnostics")]
pub struct Cli {
    /// Worker threads (falls back to MORREY_SPARSE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON object whose keys stand in for the subcommand's flags; flags
    /// given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local, global, complementary or classical Morrey norms of a field.
    Norm(commands::NormArgs),
    /// Super-level-set sparseness and Z_alpha membership.
    Sparseness(commands::SparsenessArgs),
    /// Implication sweeps for the sparseness lemmas.
    Verify(commands::VerifyArgs),
    /// Pseudo-spectral Navier-Stokes run.
    Simulate(commands::SimulateArgs),
    /// Restricted Morrey criteria on a saved trajectory.
    Criterion(commands::CriterionArgs),
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidGrid(_)
            | Error::InvalidParameter(_)
            | Error::RadiusOutOfRange { .. }
            | Error::InadmissiblePair { .. }
            | Error::ScaleRange(_)
            | Error::Unsupported(_) => EXIT_USAGE,
            Error::MalformedHeader(_) | Error::SizeMismatch { .. } | Error::NonFinite(_) => {
                EXIT_INPUT
            }
            Error::Scheduling(_) => EXIT_SCHEDULING,
            _ => EXIT_COMPUTATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_COMPUTATION,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: EXIT_COMPUTATION,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self {
            code: EXIT_COMPUTATION,
            message: e.to_string(),
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                Failure::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::usage("thread count must be at least 1"));
        }
        // a pool may already exist when embedded; keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| match &cli.command {
        Command::Norm(a) => commands::norm(a, cli.config.as_deref()),
        Command::Sparseness(a) => commands::sparseness(a, cli.config.as_deref()),
        Command::Verify(a) => commands::verify(a, cli.config.as_deref()),
        Command::Simulate(a) => commands::simulate(a, cli.config.as_deref()),
        Command::Criterion(a) => commands::criterion(a, cli.config.as_deref()),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
