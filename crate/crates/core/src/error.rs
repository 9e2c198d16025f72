//! Crate-wide error type.

use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// I/O failure, with the path involved when known.
    Io { path: Option<PathBuf>, source: io::Error },
    /// A file's content does not match its declared schema.
    Parse { path: Option<PathBuf>, message: String },
    /// Declared size and actual payload disagree.
    SizeMismatch { expected: usize, actual: usize, what: String },
    /// Two grids that must share dimensions do not.
    DimMismatch { expected: (usize, usize, usize), actual: (usize, usize, usize), what: String },
    /// A parameter is outside its documented domain.
    InvalidParam(String),
    /// Input data violates an operation precondition.
    InvalidData(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: Some(path.into()), source }
    }

    pub(crate) fn parse(path: Option<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path, message: message.into() }
    }

    /// Dimension-mismatch helper for 2-D grids (z fixed to 1).
    pub(crate) fn dims_2d(expected: (usize, usize), actual: (usize, usize), what: &str) -> Self {
        Error::DimMismatch {
            expected: (expected.0, expected.1, 1),
            actual: (actual.0, actual.1, 1),
            what: what.to_string(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path: Some(p), source } => write!(f, "{}: {}", p.display(), source),
            Error::Io { path: None, source } => write!(f, "i/o error: {source}"),
            Error::Parse { path: Some(p), message } => write!(f, "{}: {}", p.display(), message),
            Error::Parse { path: None, message } => write!(f, "parse error: {message}"),
            Error::SizeMismatch { expected, actual, what } => {
                write!(f, "{what}: expected {expected} elements, found {actual}")
            }
            Error::DimMismatch { expected, actual, what } => {
                write!(f, "{what}: dimensions {actual:?} do not match {expected:?}")
            }
            Error::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
            Error::InvalidData(m) => write!(f, "invalid data: {m}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(source: io::Error) -> Self {
        Error::Io { path: None, source }
    }
}
