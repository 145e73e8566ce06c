//! `gaussdyn` command-line front end: JSON scenarios in, CSV/JSON
//! artifacts out. Errors are printed to stderr as one JSON object.

mod commands;
mod error;
mod io;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaussdyn::Exec;
use serde_json::Value;

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "gaussdyn", version, about = "Gaussian-state dynamics under quadratic Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario and write trajectory artifacts.
    Evolve {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Null space of the covariance-flow matrix and invariant states.
    Invariants {
        scenario: PathBuf,
        /// Also write the declared invariants artifact here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tomogram grid of the scenario state.
    Tomogram {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Thermal weights and thermal-state summary.
    Thermal {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and check a scenario without running it.
    Validate { scenario: PathBuf },
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GAUSSDYN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| gaussdyn::Error::InvalidConfig(format!("GAUSSDYN_THREADS must be a positive integer, got {raw:?}")))?;
    gaussdyn::parallel::configure_threads(n)?;
    Ok(())
}

fn run(cli: Cli) -> Result<Value, CliError> {
    threads_from_env()?;
    match cli.command {
        Command::Evolve { scenario, out } => commands::run_evolve(&scenario::load(&scenario)?, &out),
        Command::Invariants { scenario, out } => commands::run_invariants(&scenario::load(&scenario)?, out.as_deref()),
        Command::Tomogram { scenario, out } => commands::run_tomogram(&scenario::load(&scenario)?, &out, Exec::Parallel),
        Command::Thermal { scenario, out } => commands::run_thermal(&scenario::load(&scenario)?, &out),
        Command::Validate { scenario } => {
            let sc = scenario::load(&scenario)?;
            sc.validate()?;
            Ok(serde_json::json!({ "scenario": sc.name, "valid": true }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
