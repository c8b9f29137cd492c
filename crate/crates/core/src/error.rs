use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state fell off the rational manifold (|p| reached 1 or c vanished).
    #[error("state left L(1) at t = {t}: {reason}")]
    LeftManifold { t: f64, reason: String },

    #[error("singular value decomposition failed to converge ({size}x{size})")]
    SvdFailed { size: usize },

    /// Non-finite values appeared; `t` is the last time with a valid state.
    #[error("numerical instability after t = {t}")]
    Unstable { t: f64 },

    #[error("no resonant phase found; residual range [{min}, {max}]")]
    NoRoot { min: f64, max: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("no exponential regime: {0}")]
    NoExponentialRegime(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
