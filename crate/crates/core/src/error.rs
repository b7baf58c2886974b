use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("kernel bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("degenerate spread: all {0} predictions are identical")]
    DegenerateSpread(usize),

    #[error("length mismatch: {left} true values vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("undefined variance: true values are constant")]
    UndefinedVariance,

    #[error("division by zero: true value at row {row} is zero")]
    ZeroTarget { row: usize },

    #[error("training diverged at epoch {epoch} (seed {seed})")]
    TrainingDiverged { epoch: usize, seed: u64 },

    #[error("ensemble member {member} failed: {source}")]
    Member {
        member: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("test row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Ingestion {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("model format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
