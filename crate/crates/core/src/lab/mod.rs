//! Experiment orchestration: JSON run configs in, CSV trajectories and JSON
//! summaries out.

pub mod compare;
pub mod config;
pub mod output;
mod run;

use std::fmt;

pub use compare::{compare_trajectories, ColumnDeviation, CompareReport, CompareSettings};
pub use config::{ExperimentKind, InitialData, RunSpec};
pub use run::{run, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Failure that stops a run before or while writing output.
#[derive(Clone, Debug, PartialEq)]
pub enum LabError {
    /// Invalid config or unwritable output location.
    Config(String),
    /// Numerical abort; whatever could be written has been.
    Numerical(String),
}

impl LabError {
    pub(crate) fn config(e: impl fmt::Display) -> Self {
        LabError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => EXIT_CONFIG,
            LabError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "config error: {m}"),
            LabError::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl std::error::Error for LabError {}
