use std::fmt;

use attrition_core::{Error, ErrorClass};

/// Process exit codes. Stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Usage = 2,
    Io = 3,
    Schema = 4,
    Numeric = 5,
    NotReached = 10,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

impl From<ErrorClass> for Exit {
    fn from(class: ErrorClass) -> Self {
        match class {
            ErrorClass::Usage => Exit::Usage,
            ErrorClass::Io => Exit::Io,
            ErrorClass::Schema => Exit::Schema,
            ErrorClass::Numeric => Exit::Numeric,
        }
    }
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit: Exit::Usage,
            message: message.into(),
        }
    }

    pub fn with_context(mut self, context: &str) -> Self {
        self.message = format!("{context}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            exit: e.class().into(),
            message: e.to_string(),
        }
    }
}

/// Errors reading a schema file count as schema failures even when the file
/// is missing.
pub fn as_schema_error(e: Error) -> CliError {
    CliError {
        exit: Exit::Schema,
        message: e.to_string(),
    }
}

pub type CliResult<T> = Result<T, CliError>;
