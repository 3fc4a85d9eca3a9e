//! Command-line front end for the `der-coopt` library.
//!
//! Commands read one JSON config, run the requested experiment and write
//! CSV files plus a `summary.json` into the output directory. Given the
//! same config and seed every CSV is byte-identical across runs.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use commands::{cmd_compare, cmd_gap, cmd_simulate, cmd_thresholds, Algorithm, RunOptions};
pub use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Core(#[from] der_coopt::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 3 when the DP resource guard refuses, 4 for solver
    /// or numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use der_coopt::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 4,
            CliError::Core(e) => match e {
                E::Domain(_) | E::A1Violated { .. } => 2,
                E::ResourceGuard { .. } => 3,
                E::Numeric(_) | E::UndefinedGap => 4,
                _ => 1,
            },
            _ => 1,
        }
    }
}
