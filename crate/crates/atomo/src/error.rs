//! Crate-wide error type.
//!
//! Recoverable conditions (a solver that hit its iteration cap, a boundary
//! simulation that stopped before full decay) are reported as [`Warning`]s
//! attached to the result, not as errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Finite element assembly failed, e.g. on a degenerate triangle.
    #[error("assembly error in triangle {triangle}: {reason}")]
    Assembly { triangle: usize, reason: String },

    /// Requested time step violates the explicit stability bound.
    #[error("stability error: dt = {dt:.3e} exceeds bound {bound:.3e}")]
    Stability { dt: f64, bound: f64 },

    /// A time integration produced non-finite values.
    #[error("divergence at step {step}: non-finite state")]
    Divergence { step: usize },

    /// Kernel evaluation at a coincident pair x = x0.
    #[error("singular pair: receiver coincides with source")]
    SingularPair,

    /// A denominator underflowed to an unusable magnitude.
    #[error("underflow in {context}: |denominator| = {value:.3e}")]
    Underflow { context: &'static str, value: f64 },

    /// Least-squares fit rejected for conditioning reasons.
    #[error("fit error: {0}")]
    Fit(String),

    /// Orthonormal basis construction failed.
    #[error("basis error: {0}")]
    Basis(String),

    /// Phantom calibration could not satisfy the requested constraints.
    #[error("calibration failure: {0}")]
    Calibration(String),

    /// Config file or option was rejected.
    #[error("config error: {0}")]
    Config(String),

    /// An expected artifact is missing or malformed.
    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Exit code contract used by the command line tool:
    /// 2 config, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions surfaced alongside results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Cauchy simulation reached the horizon before the decay criterion.
    NonDecay { final_norm: f64, threshold: f64 },
    /// Iterative solver hit its cap; carries the achieved relative residual.
    Convergence { residual: f64, iterations: usize },
    /// Control synthesis residual above the configured ceiling.
    Controllability { residual: f64, ceiling: f64 },
    /// Too many near-singular pairs excluded from a ring of data.
    DataCoverage { excluded: usize, total: usize },
    /// Normal-derivative stencil fell back to first order.
    FirstOrderFallback { node: usize },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NonDecay {
                final_norm,
                threshold,
            } => write!(
                f,
                "horizon reached before decay: |v(T)| = {final_norm:.3e} > {threshold:.3e}"
            ),
            Warning::Convergence {
                residual,
                iterations,
            } => write!(
                f,
                "iteration cap {iterations} reached, relative residual {residual:.3e}"
            ),
            Warning::Controllability { residual, ceiling } => write!(
                f,
                "control residual {residual:.3e} above ceiling {ceiling:.3e}"
            ),
            Warning::DataCoverage { excluded, total } => {
                write!(f, "{excluded} of {total} ring pairs excluded as near-singular")
            }
            Warning::FirstOrderFallback { node } => {
                write!(f, "first-order normal difference at boundary node {node}")
            }
        }
    }
}
