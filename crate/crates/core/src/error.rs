use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("matrix is singular at pivot {0}")]
    Singular(usize),

    #[error("incompatible right-hand side: {0}")]
    Incompatible(String),

    #[error("setup violates {condition}: {detail}")]
    Setup { condition: String, detail: String },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate critical point: Jacobian singular at pivot {0}")]
    DegenerateCriticalPoint(usize),

    #[error("non-finite state at t = {t} (step {step}); last good state at t = {last_good_t}")]
    NonFinite { t: f64, step: u64, last_good_t: f64 },

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
