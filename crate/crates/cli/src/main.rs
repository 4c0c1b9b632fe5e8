mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use rigidock::Error;

use crate::args::{Cli, Command};

/// Failure classes and their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_) => CliError::Usage(msg),
            Error::PdbParse { .. }
            | Error::NoResidues { .. }
            | Error::TooFewNodes(_)
            | Error::Dataset(_)
            | Error::Checkpoint(_)
            | Error::Io(_)
            | Error::Json(_) => CliError::Input(msg),
            Error::Shape { .. }
            | Error::NonFinite(_)
            | Error::NonScalar(_)
            | Error::CollinearBackbone { .. }
            | Error::IsolatedNode(_)
            | Error::DegenerateKabsch(_)
            | Error::NoContact { .. }
            | Error::EmptyInterface { .. }
            | Error::GenerationFailed(_) => CliError::Numerical(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Dock(a) => commands::dock(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::GenSynthetic(a) => commands::gen_synthetic(a),
        Command::Features(a) => commands::features(a),
        Command::CheckEquivariance(a) => commands::check_equivariance(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
