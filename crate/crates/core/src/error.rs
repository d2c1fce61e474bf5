use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{file}:{line}: column `{column}`: {message}")]
    Input {
        file: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("HCW assignment infeasible: {0}")]
    Infeasible(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("I/O error on {path}: {source}")]
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
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
