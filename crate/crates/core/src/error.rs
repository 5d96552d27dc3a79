use std::path::PathBuf;

use thiserror::Error;

use crate::program::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unbounded support")]
    UnboundedSupport,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("loss samples must be nonempty")]
    EmptySamples,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("horizon mismatch: predictions cover {predictions} steps, reference covers {reference}")]
    HorizonMismatch { predictions: usize, reference: usize },

    #[error("solver did not reach an optimum (status {0:?})")]
    Solver(SolveStatus),

    #[error("safety filter infeasible at startup (status {0:?})")]
    StartupInfeasible(SolveStatus),

    #[error("no safe control available")]
    NoSafeControl,

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
