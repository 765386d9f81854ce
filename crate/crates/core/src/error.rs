use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("stability violation: {0}")]
    StabilityViolation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("normal equations are singular (pivot {pivot:e} at column {column}); use ridge_lambda > 0")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("split error: {0}")]
    Split(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("{} subsection(s) failed: {}", .0.len(), summarize(.0))]
    Subsections(Vec<(String, Error)>),
}

fn summarize(failures: &[(String, Error)]) -> String {
    failures
        .iter()
        .map(|(id, e)| format!("[{id}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }
}
