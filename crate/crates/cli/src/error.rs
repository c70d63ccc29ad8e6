//! Command errors mapped onto scriptable exit codes.

use std::fmt;
use std::path::Path;

use geoforest_core::CoreError;

/// Exit codes: 2 invalid arguments, 3 I/O failure, 4 data/oracle mismatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    InvalidArgument(String),
    Io(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidArgument(_) => 2,
            CliError::Io(_) => 3,
            CliError::Data(_) => 4,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn data(path: &Path, msg: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {msg}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(m) => CliError::InvalidArgument(m),
            CoreError::DimensionMismatch { expected, actual } => CliError::Data(format!(
                "dimension mismatch: expected {expected}, got {actual}"
            )),
        }
    }
}
