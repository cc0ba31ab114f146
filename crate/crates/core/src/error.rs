use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The fractional order is outside `0 < s < min(1, d/2)` and no override was given.
    #[error("fractional order s = {s} outside (0, {upper}) for dimension {dim}; pass the any-order override to allow it")]
    OrderOutOfRange { s: f64, upper: f64, dim: usize },

    #[error("field length {found} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `a * u` vanishes identically, so the Rayleigh quotients are undefined.
    #[error("weighted norm ||u||_(q,a) vanishes (a*u == 0)")]
    ZeroWeightedNorm,

    /// A monotone root bracket could not be established.
    #[error("bracket failure for {what}: last bracket [{lo:e}, {hi:e}]")]
    BracketFailure { what: &'static str, lo: f64, hi: f64 },

    /// The fiber projection lost its roots during an iteration.
    #[error("fiber projection has no root at lambda = {lambda} (max of fiber map {max_value}) at iteration {iteration}")]
    RootLoss {
        lambda: f64,
        max_value: f64,
        iteration: usize,
        iterate: Vec<f64>,
    },

    /// The requested parameter is outside the validity range of the Nehari method.
    #[error("lambda = {lambda} is not below the extremal value lambda* ~ {lambda_star}; minimization over the Nehari manifold is only valid for 0 < lambda < lambda*")]
    AboveExtremal { lambda: f64, lambda_star: f64 },

    #[error("all {starts} starts failed: {diagnostics:?}")]
    AllStartsFailed { starts: usize, diagnostics: Vec<String> },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::OrderOutOfRange { .. } => "order_out_of_range",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ZeroWeightedNorm => "zero_weighted_norm",
            Error::BracketFailure { .. } => "bracket_failure",
            Error::RootLoss { .. } => "root_loss",
            Error::AboveExtremal { .. } => "above_extremal",
            Error::AllStartsFailed { .. } => "all_starts_failed",
            Error::InvariantViolation(_) => "invariant_violation",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
