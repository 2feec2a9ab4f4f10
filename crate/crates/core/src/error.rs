use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
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

    /// A CSV problem at a given location. `row` is 1-based over data rows
    /// (the header is row 0).
    #[error("row {row}, column `{column}`: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("duplicate header `{0}`")]
    DuplicateHeader(String),

    #[error("outcome not binary at row {row}")]
    OutcomeNotBinary { row: usize },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no usable constraints")]
    NoUsableConstraints,

    #[error("AUC undefined: {0}")]
    AucUndefined(&'static str),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, total: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
