//! Quaternion phase retrieval.
//!
//! Recovery of a quaternion signal `x` from phaseless measurements
//! `y_k = |a_k^* x|^2` taken with a quaternion Gaussian matrix. The crate
//! provides the quaternion scalar and dense linear algebra it needs from
//! scratch, the measurement model, the Wirtinger-flow solver family
//! (QWF, QTWF, QTAF and their pure-quaternion variants), and real-arithmetic
//! baselines for the monochromatic and concatenation multichannel models.

use std::fmt;

pub mod baselines;
pub mod linalg;
pub mod measurement;
pub mod quat;
pub mod solvers;

pub use quat::Quaternion;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Inverse of a quaternion whose squared modulus is zero or underflows.
    ZeroInverse,
    /// Operand shapes do not conform.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A matrix claimed Hermitian deviates from its adjoint beyond tolerance.
    NotHermitian { asymmetry: f64 },
    /// Singular values of the real representation failed to cluster into
    /// the expected quadruples.
    DegenerateSpectrum { spread: f64, tol: f64 },
    /// An operation that requires a nonzero vector received zero.
    ZeroVector,
    /// Iterate norm exceeded the divergence guard.
    Diverged { iteration: usize, norm: f64 },
    /// A solver configuration violates its invariants.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroInverse => write!(f, "inverse of zero quaternion"),
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected:?}, got {got:?}")
            }
            Error::NotHermitian { asymmetry } => {
                write!(f, "matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")
            }
            Error::DegenerateSpectrum { spread, tol } => write!(
                f,
                "singular values do not cluster into quadruples (spread {spread:.3e} > tol {tol:.3e})"
            ),
            Error::ZeroVector => write!(f, "operation undefined for the zero vector"),
            Error::Diverged { iteration, norm } => {
                write!(f, "iterate diverged at iteration {iteration} (norm {norm:.3e})")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
