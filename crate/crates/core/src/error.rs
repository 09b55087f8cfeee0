use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("constant column `{0}`")]
    ConstantColumn(String),
    #[error("unknown level `{token}` for variable `{variable}`")]
    UnknownLevel { variable: String, token: String },
    #[error("network schema error at node `{node}`: {message}")]
    Schema { node: String, message: String },
    #[error("cpt of node `{node}` does not sum to 1 (parent configuration {config}: sum {sum})")]
    CptNotNormalized { node: String, config: usize, sum: f64 },
    #[error("graph contains a directed cycle")]
    Cycle,
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
