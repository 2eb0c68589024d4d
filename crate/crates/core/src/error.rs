use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("invalid basis spec: {0}")]
    InvalidSpec(String),
    #[error("quadrature root-finding did not converge for node {index}")]
    Convergence { index: usize },
    #[error("eigensolver did not converge at index {index}")]
    Eigen { index: usize },
    #[error("invalid regrouping plan: index {index}: {reason}")]
    Plan { index: usize, reason: String },
    #[error("operator contract violated: {0}")]
    Contract(String),
    #[error("negative existential weight {value:e} at node {index}")]
    Domain { index: usize, value: f64 },
    #[error("state leaks {leakage:e} of its mass outside the truncated basis; increase the dimension")]
    Truncation { leakage: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}
