use thiserror::Error;

/// Errors raised across interval arithmetic, function evaluation and descent.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in interval arithmetic: {0}")]
    Range(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("bound inversion: lower {lo} exceeds upper {hi}")]
    BoundInversion { lo: f64, hi: f64 },

    #[error("analytic gradient unavailable at a kink (component {index})")]
    Kink { index: usize },

    #[error("analytic gradients need an expression-form function")]
    NoAnalyticForm,

    #[error("no minimizer bracketed along the ray before alpha_max = {alpha_max}")]
    Unbounded { alpha_max: f64 },

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("mean-value check inconclusive: {skipped} of {total} samples failed")]
    Inconclusive { skipped: usize, total: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
