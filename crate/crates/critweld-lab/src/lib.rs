//! Statistical experiment harness for the conformal-welding laboratory:
//! seeded replica-parallel runs, deterministic NDJSON reports and a registry
//! of verification experiments, each anchored to the statement it probes.

pub mod config;
pub mod experiments;
pub mod report;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("core error: {0}")]
    Core(critweld_core::CoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("report error: {0}")]
    Report(#[from] serde_json::Error),
}

impl From<critweld_core::CoreError> for LabError {
    fn from(e: critweld_core::CoreError) -> Self {
        LabError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
