use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("unsupported shape/dimension combination: {0}")]
    UnsupportedShape(String),

    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("covering failure: {0}")]
    CoverageFailure(String),

    #[error("degenerate restriction: smallest eigenvalue {lambda_min:e} is not positive")]
    DegenerateRestriction { lambda_min: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NonConvergence { sweeps: usize, off: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("ill-conditioned system: condition number {cond:e} exceeds {cap:e}")]
    IllConditioned { cond: f64, cap: f64 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
