//! `cayley-gibbs`: solve, sweep, enumerate, classify and verify four-valued
//! boundary-field Gibbs measures of the Ising model on Cayley trees.

mod commands;
mod config;
mod error;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::SolverArgs;

#[derive(Debug, Parser)]
#[command(name = "cayley-gibbs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// A scheme given by its two count rows.
#[derive(Debug, Clone, Args)]
struct SchemeArgs {
    /// Order of the tree: children per vertex.
    #[arg(long)]
    k: u32,
    /// Child counts of an H vertex: same-sign H, opposite H, same-sign L, opposite L.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    a: Vec<i64>,
    /// Child counts of an L vertex, same layout as `--a`.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    b: Vec<i64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the fixed-point system for one scheme and print JSON.
    Solve {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        /// key = value file with solver settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Tabulate solutions and extremality over a θ grid as CSV.
    Sweep(commands::SweepArgs),
    /// List every scheme of order k with its reduction and family as CSV.
    Enumerate {
        #[arg(long)]
        k: u32,
        /// Output path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match a scheme against the known measure families and print JSON.
    Classify {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Classify at the largest non-negative solution for this θ
        /// instead of at the zero solution.
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check one solution against exact finite-volume measures and print a
    /// JSON report; exits 1 if any check fails.
    Verify(commands::VerifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { scheme, theta, config, solver } => commands::solve(&scheme, theta, config.as_deref(), &solver),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Enumerate { k, out } => commands::enumerate(k, out.as_deref()),
        Command::Classify { scheme, theta, config, solver } => {
            commands::classify(&scheme, theta, config.as_deref(), &solver)
        }
        Command::Verify(args) => commands::verify(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
