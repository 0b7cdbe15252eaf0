//! Structured prediction by output kernel regression with a learned
//! finite-dimensional output embedding.
//!
//! The training pipeline is kernel ridge regression into the output feature
//! space ([`krr`]), followed by estimation of a `p`-dimensional subspace from
//! a Gram matrix mixing regressed training outputs and unlabeled outputs
//! ([`oel`]). Prediction scores a finite candidate set in the learned space
//! ([`decode`]).

// Links the BLAS/LAPACK implementation used by ndarray and ndarray-linalg.
extern crate blas_src;

pub mod dataio;
pub mod decode;
pub mod error;
pub mod kernels;
pub mod krr;
pub mod linalg;
pub mod metrics;
pub mod oel;
pub mod pipeline;
pub mod seed;
pub mod tuning;

pub use error::{ErrorKind, OelError, Result};
