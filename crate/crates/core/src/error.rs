use std::io;

use thiserror::Error;

pub type Result<T, E = LaraError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LaraError {
    /// Caller passed something that does not fit the declared schema or API contract.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    /// A user-defined function broke one of its required algebraic laws on real data.
    #[error("property violation: {0}")]
    Property(String),

    #[error("unbound attribute `{0}`")]
    UnboundAttribute(String),

    /// A merge operator was handed inputs that do not share the required key prefix.
    #[error("sort required: {0}")]
    SortRequired(String),

    #[error("stream out of order: {0}")]
    OrderViolation(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("storage corruption in {file}: {message}")]
    Corrupt { file: String, message: String },

    #[error("stale deferred view `{0}`: its base table changed after the view was created")]
    StaleView(String),

    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("manifest encoding: {0}")]
    Json(#[from] serde_json::Error),
}

impl LaraError {
    pub fn usage(msg: impl Into<String>) -> Self {
        LaraError::Usage(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        LaraError::Schema(msg.into())
    }

    pub fn property(msg: impl Into<String>) -> Self {
        LaraError::Property(msg.into())
    }

    pub fn plan(msg: impl Into<String>) -> Self {
        LaraError::Plan(msg.into())
    }
}
