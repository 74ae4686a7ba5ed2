//! `annulus-abc` — config-driven experiments for the exterior-problem solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use annulus_abc::{config, runner, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "annulus-abc",
    about = "Exterior-problem experiments on an annular domain with a nonlocal absorbing boundary condition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and report DOF count, residual, errors, and timings.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a refinement series and write errors.csv with fitted rates.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve once and export the total field to field.vtk.
    Field {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check separation, data compatibility, and support conditions
    /// without solving.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            runner::run(&config::load_config(config)?)?;
        }
        Command::Converge { config } => {
            runner::converge(&config::load_config(config)?)?;
        }
        Command::Field { config } => {
            runner::field(&config::load_config(config)?)?;
        }
        Command::Validate { config } => {
            runner::validate(&config::load_config(config)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
