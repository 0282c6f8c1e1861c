use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("Legendre basis needs an even lmax >= {min}, got {lmax}")]
    InvalidBasis { lmax: usize, min: usize },

    #[error("field has {got} samples but the grid has {expected} nodes")]
    Dimension { expected: usize, got: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("complete elliptic integral K is singular at m = {0}")]
    SingularArgument(f64),

    #[error("coincident source and target points; use the singular-panel path")]
    SingularKernel,

    #[error("profile is not positive: min {min:.6e} at t = {at:.6}")]
    DegenerateShape { min: f64, at: f64 },

    #[error(
        "finite-difference step {step:e} is unreliable: step-halving changed the result by {disagreement:.3e}"
    )]
    FdStep { step: f64, disagreement: f64 },

    #[error("Newton iteration diverged at s = {s} after {iterations} iterations (residual trace {trace:?})")]
    Divergence {
        s: f64,
        iterations: usize,
        trace: Vec<f64>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
