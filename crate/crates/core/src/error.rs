use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("loop has negative Fourier modes and cannot be evaluated at z = 0")]
    ZeroArgument,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular at grid node {0}")]
    SingularAtNode(usize),

    #[error("Fourier tail did not decay below {tol:e} within the grid (largest tail block norm {tail:e})")]
    TailNotConverged { tol: f64, tail: f64 },

    #[error("phase jump of {jump:.3} rad between nodes {node} and {next}; refine the grid", next = node + 1)]
    PhaseJumpTooLarge { node: usize, jump: f64 },

    #[error("winding number of det is {0}, expected 0")]
    NonzeroWinding(i64),

    #[error("normalized Toeplitz sequence is growing (last ratio {ratio:.3})")]
    DivergenceDetected { ratio: f64 },

    #[error("{stage} did not converge at size {size}")]
    NotConverged { stage: &'static str, size: usize },

    #[error("operation requires a scalar (1x1) loop, found block size {0}")]
    NotScalar(usize),

    #[error("factorization system is singular (condition estimate {cond:e}); the point is off the big cell or has nonzero partial indices")]
    SingularSystem { cond: f64 },

    #[error("inverse failed: {0}")]
    InverseFailed(String),

    #[error("safe comparison window is empty: N = {n} does not exceed combined bandwidth {bandwidth}")]
    WindowEmpty { n: usize, bandwidth: usize },

    #[error("{0} is not an exponent (multiple of the Coxeter number)")]
    NotAnExponent(i64),

    #[error("adjoint series did not converge within {0} terms")]
    SeriesNotConverged(usize),

    #[error("flow generators do not commute (commutator norm {0:e})")]
    NonCommuting(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
