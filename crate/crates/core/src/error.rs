use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("segmentation mismatch: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no trace record for task {task_id} at tier {tier}")]
    MissingTrace { task_id: u64, tier: usize },

    #[error("trace format error: {0}")]
    Trace(String),

    #[error("tier {tier}: {source}")]
    Tier {
        tier: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_tier(self, tier: usize) -> Self {
        match self {
            e @ Error::Tier { .. } => e,
            other => Error::Tier { tier, source: Box::new(other) },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
