//! Experiment runner for the hypospec toolkit.
//!
//! Each subcommand reads an [`ExperimentConfig`], runs one pipeline and
//! produces a [`RunReport`] with results, error estimates and pass/fail
//! assertions, plus CSV tables for bulk data.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Manifold, Subcommand, Tolerances};
pub use report::{report_render, Assertion, Quantity, RunReport, Status};
pub use run::{run, RunOutput};

/// Exit status for configuration and input errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for numerical-quality refusals.
pub const EXIT_REFUSED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("bad input: {0}")]
    Input(String),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => EXIT_CONFIG,
            _ => 1,
        }
    }
}
