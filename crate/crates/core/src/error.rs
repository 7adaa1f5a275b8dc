use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum LceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("non-numeric value `{value}` in column `{column}` at line {line}")]
    NonNumericCell {
        line: u64,
        column: String,
        value: String,
    },

    #[error("missing label at line {line}")]
    MissingLabel { line: u64 },

    #[error("classification needs at least 2 distinct labels, found {0}")]
    TooFewClasses(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("row width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("operation `{operation}` is not available for {task} models")]
    WrongTask {
        operation: &'static str,
        task: &'static str,
    },

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    #[error("unknown model format version {0}")]
    UnknownVersion(u64),

    #[error("model schema mismatch at {location}: {message}")]
    ModelSchema { location: String, message: String },

    #[error("corrupted model payload at line {line}, column {column}: {message}")]
    ModelCorrupt {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid accuracy table: {0}")]
    Table(String),
}

pub type Result<T, E = LceError> = std::result::Result<T, E>;

impl LceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LceError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LceError::InvalidArgument(msg.into())
    }
}
