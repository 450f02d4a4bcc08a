use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Validation(String),

    #[error("constraint violated: {what} at index {index} (value {value:e})")]
    ConstraintViolation {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("degenerate chain: p + q = 0")]
    DegenerateChain,

    #[error("constraint box has no member: {0}")]
    NoMember(String),

    #[error("moment vector is not invertible: {0}")]
    NonInvertible(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("numerical degeneracy at step {step}: predictive density {value:e}")]
    NumericalDegeneracy { step: usize, value: f64 },

    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Infeasibility-type errors (as opposed to malformed input).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::NoMember(_))
    }
}
