use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sequence is not strictly increasing at index {index}")]
    NotIncreasing { index: usize },

    #[error("integer overflow while generating sequence after {generated} terms")]
    Overflow { generated: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires a periodic set or an explicit scan window")]
    NeedsScanWindow,

    #[error("profile has relative mass {relative:.3e} outside the quarter interval around {center}")]
    ProfileOutsideSupport { center: i64, relative: f64 },

    #[error("island quarter intervals overlap between centers {left} and {right}")]
    IslandsOverlap { left: i64, right: i64 },

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
