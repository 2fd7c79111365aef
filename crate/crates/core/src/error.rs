use num_complex::Complex64;
use thiserror::Error;

/// Every failure the library reports. Hypothesis violations are kept apart
/// from plain domain errors so front ends can tell the user which
/// structural assumption of the operator setting was not met.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("point {point} is not inside the open unit disk (|w| = {modulus})")]
    OutsideDisk { point: Complex64, modulus: f64 },

    #[error("derivative of order {order} requested from a series truncated at degree {degree} with nonzero tail")]
    TruncationInsufficient { order: usize, degree: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("operator setting not supported: {0}")]
    Unsupported(String),

    #[error("symbol is not a self-map with sup-norm below one (sup estimate {sup}, required <= {limit})")]
    NotSelfMap { sup: f64, limit: f64 },

    #[error("no interior fixed point: iteration did not converge after {iterations} steps (last step {last_step:e})")]
    NoInteriorFixedPoint { iterations: usize, last_step: f64 },

    #[error("series is identically zero up to degree {degree}")]
    IdenticallyZero { degree: usize },

    #[error("power iteration did not converge in {iterations} iterations (last estimate {last_estimate})")]
    NoConvergence {
        iterations: usize,
        last_estimate: f64,
    },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
}

impl OpError {
    /// Stable machine-readable kind, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            OpError::OutsideDisk { .. } => "domain",
            OpError::TruncationInsufficient { .. } => "truncation",
            OpError::InvalidArgument(_) => "invalid_argument",
            OpError::Hypothesis(_) => "hypothesis",
            OpError::Unsupported(_) => "unsupported",
            OpError::NotSelfMap { .. } => "hypothesis",
            OpError::NoInteriorFixedPoint { .. } => "hypothesis",
            OpError::IdenticallyZero { .. } => "hypothesis",
            OpError::NoConvergence { .. } => "numerical",
            OpError::Eigensolver(_) => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, OpError>;

pub(crate) fn check_in_disk(w: Complex64) -> Result<()> {
    let modulus = w.norm();
    if modulus < 1.0 && modulus.is_finite() {
        Ok(())
    } else {
        Err(OpError::OutsideDisk { point: w, modulus })
    }
}
