use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    InvalidInput(String),
    #[error("too many malformed rows: {rejected} of {total} rejected (limit {limit_pct}%); first: {first}")]
    TooManyRejects {
        rejected: usize,
        total: usize,
        limit_pct: f64,
        first: String,
    },
    #[error("empty graph")]
    EmptyGraph,
    #[error("plan {0} requires spam verdicts")]
    MissingVerdicts(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
