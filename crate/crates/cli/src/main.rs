//! `metaharvest` — harvest dataset metadata into a user-defined schema,
//! score it against annotations, and link datasets to each other.
//!
//! Exit code 0 iff zero per-dataset failures; failures are enumerated on
//! standard error. With `--llm mock` and a warm store every command is
//! deterministic: re-runs produce byte-identical outputs.

mod cli;
mod commands;
mod runtime;

use clap::Parser;
use cli::{Cli, Command};
use std::process::ExitCode;

fn init_tracing(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_tracing(cli.verbose);

    let result = match cli.command {
        Command::Schema { action } => commands::schema::run(action).map(|()| 0),
        Command::Harvest(args) => commands::harvest::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Link(args) => commands::link::run(args),
    };

    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} per-dataset failure(s)");
            ExitCode::FAILURE
        }
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
