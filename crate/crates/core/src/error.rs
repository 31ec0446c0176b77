use thiserror::Error;

/// Errors produced while loading, encoding, or mining a dataset.
#[derive(Debug, Error)]
pub enum Error {
    /// The data layout disagrees with the declared schema, or the schema itself is invalid.
    #[error("schema error: {0}")]
    Schema(String),
    /// A single cell could not be interpreted. `row` is 1-based and excludes the header.
    #[error("value error at row {row}, column `{column}`: {message}")]
    Value {
        row: usize,
        column: String,
        message: String,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
