use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("rejected line {line}: {message}")]
    RejectedLine { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("table index {index} out of range ({len} tables)")]
    TableOutOfRange { index: usize, len: usize },

    #[error("cannot unseat from an empty restaurant")]
    EmptyRestaurant,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("evaluation error: {0}")]
    Eval(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable kind, used by the CLI's single-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::RejectedLine { .. } => "rejected-line",
            Error::Config(_) => "config",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::TableOutOfRange { .. } => "table-out-of-range",
            Error::EmptyRestaurant => "empty-restaurant",
            Error::UnknownPreset(_) => "unknown-preset",
            Error::Infeasible(_) => "infeasible",
            Error::Checkpoint(_) => "checkpoint",
            Error::Eval(_) => "eval",
        }
    }
}
