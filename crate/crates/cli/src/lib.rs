//! Library side of the `abusetrend` command: configuration, the pipeline
//! stages, staged artifact writing and run manifests.

pub mod artifacts;
pub mod config;
pub mod manifest;
pub mod pipeline;

use thiserror::Error;

pub use config::{PipelineConfig, ResolvedConfig};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const OUTPUT: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INGEST: i32 = 3;
    pub const MODEL: i32 = 4;
}

/// A failure tagged with the pipeline stage it came from.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("ingest error: {0}")]
    Ingest(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Ingest(_) => exit::INGEST,
            CliError::Model(_) => exit::MODEL,
            CliError::Output(_) => exit::OUTPUT,
        }
    }
}
