//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by the library.
///
/// Each variant belongs to one of three classes, mirrored by the CLI exit
/// codes: schema errors (malformed input), precondition violations (valid
/// input outside an operation's domain), and internal check failures
/// (a cross-check that is mathematically guaranteed did not hold).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Schema(String),

    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("array is not centered: max |row/col mean| = {max_dev:.3e} exceeds {tol:.0e}")]
    NotCentered { max_dev: f64, tol: f64 },

    #[error("degenerate variance: Var(W) = {var:.3e} is below the cutoff")]
    DegenerateVariance { var: f64 },

    #[error("exact enumeration supports n <= {max}, got n = {n}")]
    SizeLimitExceeded { n: usize, max: usize },

    #[error("adaptive quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("theta = {theta:.6} is not positive; concentration constants are inapplicable at this n")]
    ThetaNonpositive { theta: f64 },

    #[error("internal cross-check failed: {0}")]
    InternalCheck(String),
}

impl Error {
    /// Exit code class used by the CLI: 1 = schema, 2 = precondition,
    /// 3 = internal check failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) => 1,
            Error::InvalidArguments(_)
            | Error::NotCentered { .. }
            | Error::DegenerateVariance { .. }
            | Error::SizeLimitExceeded { .. }
            | Error::ThetaNonpositive { .. } => 2,
            Error::QuadratureFailure(_) | Error::InternalCheck(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
