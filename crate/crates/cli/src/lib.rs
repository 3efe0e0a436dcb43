//! File formats and reporting for the workload compression CLI.
//!
//! The binary in this crate dispatches over the library in `wlc-core`;
//! everything that touches the filesystem (JSONL logs, JSON feature
//! specs, target distributions, result reports) lives here.

pub mod io;
pub mod report;

use std::fmt;

/// CLI failure classes, mapped to process exit codes: configuration
/// errors exit 1, data errors exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Classify a core error: parameter-shaped problems are configuration
/// errors, everything about the data itself is a data error.
impl From<wlc_core::Error> for CliError {
    fn from(e: wlc_core::Error) -> Self {
        use wlc_core::Error::*;
        match e {
            InvalidGamma(_) | InvalidK { .. } | InvalidEpsilon(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}
