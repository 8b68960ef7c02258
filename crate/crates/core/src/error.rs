use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("forward model failed at quadrature node {node}: {source}")]
    ModelEvaluation {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model error: {0}")]
    Model(String),

    #[error("likelihood undefined: {0}")]
    Likelihood(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("autocorrelation time undefined: {0}")]
    Autocorrelation(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
