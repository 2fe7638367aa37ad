//! Command-line front end: availability logs in, predictions, simulations
//! and sweep reports out.
//!
//! Exit codes are a stable contract: 0 success, 2 input error, 3 estimator
//! undefined (e.g. a failure-free availability log), 4 simulation budget
//! exceeded.

mod args;
mod commands;
mod config;
mod manifest;

use clap::Parser;

pub(crate) struct CliFailure {
    pub code: i32,
    pub message: String,
}

pub(crate) type CliResult<T> = Result<T, CliFailure>;

impl CliFailure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ckptplan::Error> for CliFailure {
    fn from(err: ckptplan::Error) -> Self {
        let code = match &err {
            ckptplan::Error::NoFailures | ckptplan::Error::EmptyLog(_) => 3,
            ckptplan::Error::BudgetExceeded { .. } => 4,
            _ => 2,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliFailure {
    fn from(err: std::io::Error) -> Self {
        Self {
            code: 2,
            message: err.to_string(),
        }
    }
}

/// Parse arguments, dispatch, and return the process exit code.
pub fn run() -> i32 {
    let cli = args::Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}
