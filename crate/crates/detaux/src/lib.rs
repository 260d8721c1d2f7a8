//! Pipeline library behind the `detaux` binary: configuration, stages,
//! manifest, and the final STL-vs-MTL comparison report.

pub mod config;
pub mod manifest;
pub mod report;
pub mod stages;
pub mod svg;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{PipelineConfig, Precision, RunMode};
pub use report::FinalReport;
pub use stages::{full_run, StagePaths, STATUS_NO_AUX, STATUS_OK};

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad or inconsistent configuration (exit code 2).
    #[error("configuration: {0}")]
    Config(String),
    /// An upstream stage has not produced its artifact yet (exit code 3).
    #[error("missing artifact {path}: run the `{stage}` stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    /// Everything else (exit code 1).
    #[error("{0}")]
    Run(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingArtifact { .. } => 3,
            PipelineError::Run(_) => 1,
        }
    }
}

macro_rules! wrap_error {
    ($($t:ty),*) => {$(
        impl From<$t> for PipelineError {
            fn from(e: $t) -> Self {
                PipelineError::Run(e.to_string())
            }
        }
    )*};
}

wrap_error!(
    std::io::Error,
    detaux_core::synthgen::DataError,
    detaux_core::subspace::DisError,
    detaux_core::taskmine::MineError,
    detaux_core::mtlearn::MtlError,
    detaux_core::checkpoint::CheckpointError
);
