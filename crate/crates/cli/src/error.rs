//! Failure classification: every error maps to one exit code and one
//! structured stderr line.

use std::fmt;
use std::path::Path;

use regor_core::evaluation::EvalError;
use regor_core::features::FeatureError;
use regor_core::geometry::GeometryError;
use regor_core::io::IoError;
use regor_core::regeneration::RegenError;

/// Exit-code classes: 2 for missing or unreadable inputs, 3 for anything
/// that failed to parse or validate, 4 for compute-stage faults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    NotFound,
    Invalid,
    Compute,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::NotFound => 2,
            ErrorKind::Invalid => 3,
            ErrorKind::Compute => 4,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ErrorKind::NotFound => "io",
            ErrorKind::Invalid => "config",
            ErrorKind::Compute => "compute",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn not_found(path: &Path) -> Self {
        Self {
            kind: ErrorKind::NotFound,
            message: format!("cannot read {}", path.display()),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Invalid, message: message.into() }
    }

    pub fn compute(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Compute, message: message.into() }
    }

    /// Attaches the offending path to bare I/O errors so the message always
    /// names the file.
    pub fn from_io(err: IoError, path: &Path) -> Self {
        match err {
            IoError::Io(inner) => Self {
                kind: ErrorKind::NotFound,
                message: format!("cannot read {}: {inner}", path.display()),
            },
            other => Self::from(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.kind.label(), self.message)
    }
}

impl From<IoError> for CliError {
    fn from(err: IoError) -> Self {
        let kind = match &err {
            IoError::Io(_) => ErrorKind::NotFound,
            _ => ErrorKind::Invalid,
        };
        Self { kind, message: err.to_string() }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        Self { kind: ErrorKind::Invalid, message: err.to_string() }
    }
}

impl From<RegenError> for CliError {
    fn from(err: RegenError) -> Self {
        Self { kind: ErrorKind::Compute, message: err.to_string() }
    }
}

impl From<GeometryError> for CliError {
    fn from(err: GeometryError) -> Self {
        Self { kind: ErrorKind::Compute, message: err.to_string() }
    }
}

impl From<FeatureError> for CliError {
    fn from(err: FeatureError) -> Self {
        Self { kind: ErrorKind::Compute, message: err.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self { kind: ErrorKind::NotFound, message: err.to_string() }
    }
}
