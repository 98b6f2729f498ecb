use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error(
        "scalar root solve did not converge after {iterations} iterations \
         (bracket [{lo:e}, {hi:e}], target {target:e})"
    )]
    RootSolve {
        iterations: usize,
        lo: f64,
        hi: f64,
        target: f64,
    },

    #[error("factorization failed: non-positive pivot at row {0}")]
    Factorization(usize),

    #[error("newton iteration failed at time step {step}; residual history {history:?}")]
    NewtonFailed { step: usize, history: Vec<f64> },

    #[error("line search failed at iteration {iteration} (step {step:e}, objective {objective:e})")]
    LineSearch {
        iteration: usize,
        step: f64,
        objective: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
