use thiserror::Error;

/// Errors produced by operators, solvers and the sweep harness.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("non-finite coordinate in input vector")]
    NonFiniteInput,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid set: lower bound exceeds upper bound at index {0}")]
    InvalidSet(usize),

    #[error("operator is not monotone: lambda_min(M + M^T) = {0:.3e}")]
    NotMonotone(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("regularization weight must be strictly positive")]
    DegenerateRegularization,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("certificate violated the relative-error condition: lhs {lhs:.6e} > rhs {rhs:.6e}")]
    CertificateViolation { lhs: f64, rhs: f64 },

    #[error("negative epsilon gap ({0:.3e}): operator is not the subdifferential of a convex function")]
    BrokenConvexity(f64),

    #[error("iterates diverged (norm {0:.3e})")]
    NumericFailure(f64),

    #[error("problem does not carry the required data: {0}")]
    UnsupportedProblem(String),

    #[error("comparison grids do not match")]
    InvalidComparison,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SolverError>;
