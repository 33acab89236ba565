use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes. The CLI maps each class onto a stable exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Io,
    Schema,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{0}: file is empty (no header row)")]
    EmptyFile(PathBuf),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    BadRow { row: u64, message: String },

    #[error("column `{column}`: unknown category `{value}`")]
    UnknownCategory { column: String, value: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("schema fingerprint mismatch: model {expected}, data {actual}")]
    FingerprintMismatch { expected: String, actual: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("unsupported format version {found} (this build reads up to {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("unexpected file format `{0}`")]
    WrongFormat(String),

    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{0}")]
    Empty(String),

    #[error("search too large: {branching}^{depth} exceeds {limit} nodes")]
    Intractable {
        branching: usize,
        depth: usize,
        limit: u64,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::EmptyFile(_) => ErrorClass::Io,
            Error::Config(_) | Error::Intractable { .. } => ErrorClass::Usage,
            Error::NonFinite(_) | Error::Divergence { .. } => ErrorClass::Numeric,
            Error::MissingColumn(_)
            | Error::BadRow { .. }
            | Error::UnknownCategory { .. }
            | Error::Schema(_)
            | Error::FingerprintMismatch { .. }
            | Error::Dimension { .. }
            | Error::Parse { .. }
            | Error::UnsupportedVersion { .. }
            | Error::WrongFormat(_)
            | Error::Checksum { .. }
            | Error::Empty(_) => ErrorClass::Schema,
        }
    }
}
