use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by [`ErrorKind`] so callers (the CLI in particular)
/// can map them onto exit codes without matching every variant.
#[derive(Debug, Error)]
pub enum OelError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e} > {tol:.1e})")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("factorization failed: matrix not positive definite (min pivot {min_pivot:.3e} at index {index})")]
    Factorization { min_pivot: f64, index: usize },

    #[error("eigenvalue {value:.3e} is below the clamping threshold; the matrix is not PSD")]
    NegativeEigenvalue { value: f64 },

    #[error("LAPACK failure in {context}: {detail}")]
    Lapack {
        context: &'static str,
        detail: String,
    },

    #[error("{}:{line}: {reason}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("model bundle error: {0}")]
    Bundle(String),

    #[error("checksum mismatch for {0}")]
    Checksum(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("all {0} grid points failed to fit")]
    AllGridPointsFailed(usize),
}

/// Coarse error classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or arguments supplied by the caller.
    Usage,
    /// Malformed, inconsistent, or missing data.
    Data,
    /// Numerical breakdown (factorization, eigensolver).
    Numerical,
}

impl OelError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            OelError::InvalidParameter { .. } => ErrorKind::Usage,
            OelError::Factorization { .. }
            | OelError::NegativeEigenvalue { .. }
            | OelError::Lapack { .. }
            | OelError::AllGridPointsFailed(_) => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OelError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(
        context: &'static str,
        expected: impl std::fmt::Display,
        got: impl std::fmt::Display,
    ) -> Self {
        OelError::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        OelError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, OelError>;
