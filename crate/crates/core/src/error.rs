use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("input has no data rows: {0}")]
    EmptyInput(String),

    #[error("column `{0}` is entirely missing and cannot be imputed")]
    Unimputable(String),

    #[error("stratification error: class `{class}` has {count} row(s), need at least 2")]
    Stratification { class: String, count: usize },

    #[error("type error: {0}")]
    Type(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model is not trained")]
    Untrained,

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("missing value in column `{column}` at row {row}")]
    MissingValue { column: String, row: usize },

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stale preparation: {0}")]
    StalePreparation(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by invalid user input or configuration rather
    /// than by a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Argument(_) | Error::Schema(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
