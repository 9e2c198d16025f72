//! Process-level failure classes with fixed exit codes.
//!
//! Every command funnels into one of three buckets so scripts can branch on
//! the exit status alone: 1 for bad invocations, 2 for unreadable or
//! inconsistent input data, 3 for internal faults (including panics).

use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum AppError {
    /// Bad flags, flag combinations, or out-of-range parameters: exit 1.
    Usage(String),
    /// Missing, malformed, or mutually inconsistent input files: exit 2.
    Data(String),
    /// Invariant violations that indicate a bug rather than bad input: exit 3.
    Internal(String),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        AppError::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        AppError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Usage(_) => ExitCode::from(1),
            AppError::Data(_) => ExitCode::from(2),
            AppError::Internal(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for AppError {}

/// Library errors always describe the data they choked on, so they map to the
/// data bucket; flag problems are classified as usage before the library runs.
impl From<radkit_core::Error> for AppError {
    fn from(e: radkit_core::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

/// Prefixes an error with the pipeline stage it came from, so a failed run
/// names the step that broke (`project: ...`) rather than just the symptom.
pub trait StageContext<T> {
    fn stage(self, name: &str) -> AppResult<T>;
}

impl<T, E: fmt::Display> StageContext<T> for Result<T, E> {
    fn stage(self, name: &str) -> AppResult<T> {
        self.map_err(|e| AppError::Data(format!("{name}: {e}")))
    }
}
