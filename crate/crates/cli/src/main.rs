//! `tipsy`: simulate, sweep, analyse and solve the tipsy cop and robber game.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or parameters; exit code 2.
    Config(String),
    /// Failure while running; exit code 3.
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Phase(a) => commands::phase(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
