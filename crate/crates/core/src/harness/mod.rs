//! Experiment runner, figure-data emission and the command-line front end.

pub mod checks;
pub mod cli;
pub mod config;
pub mod csv;
pub mod experiment;
pub mod menu_io;

use thiserror::Error;

use crate::economy::Mechanism;

pub use checks::{check_orderings, check_sweep, run_oracle_checks, CheckOutcome};
pub use config::{ConfigOverrides, ExperimentConfig};
pub use experiment::{assemble_experiment, emit_figure_data, run_experiment, ExperimentResult, SweepRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Model(#[from] crate::Error),

    #[error("{mechanism} menu is infeasible: {constraint} has slack {slack:.6e}")]
    Infeasible { mechanism: Mechanism, constraint: String, slack: f64 },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}
