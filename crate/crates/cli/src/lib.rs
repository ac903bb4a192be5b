//! Command-line front end for the two-patch bioremediation model.
//!
//! Each subcommand has a `compute` step returning a serializable report and
//! a `run` step that writes CSV/JSON files under the output directory and
//! maps the outcome to an exit status.

use std::fmt;
use std::path::Path;

pub mod commands;
pub mod config;
pub mod output;

pub use config::{ScenarioConfig, StrategySpec};

#[derive(Debug)]
pub enum CliError {
    /// Unparseable or inconsistent configuration.
    Config(String),
    Io(String),
    Numerical(twopatch_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<twopatch_core::Error> for CliError {
    fn from(e: twopatch_core::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Outcome of a command that completed without an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A trajectory ran into the horizon.
    Horizon,
    /// Some cells of a table failed.
    Partial,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Horizon => 3,
            Status::Partial => 4,
            Status::VerificationFailed => 5,
        }
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}
