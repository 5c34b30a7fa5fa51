use thiserror::Error;

/// Errors raised by the measure, noise, solver and statistics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("truncated measure has zero variance at epsilon = {eps}")]
    ZeroVariance { eps: f64 },

    #[error("integral does not converge: {what}")]
    NonIntegrable { what: String },

    #[error("restricted measure has zero mass (epsilon = {eps}, inner cutoff = {eta})")]
    EmptyRestriction { eps: f64, eta: f64 },

    #[error("restricted measure has infinite mass (epsilon = {eps}, inner cutoff = {eta}); raise the inner cutoff")]
    InfiniteActivity { eps: f64, eta: f64 },

    #[error("dropped variance fraction {fraction:.3e} exceeds budget {budget:.3e}; lower the inner cutoff")]
    BudgetExceeded { fraction: f64, budget: f64 },

    #[error("expected atom count {expected:.3e} exceeds cap {cap:.3e}; raise the inner cutoff")]
    AtomCapExceeded { expected: f64, cap: f64 },

    #[error("state became non-finite at time step {step}")]
    NonFiniteState { step: usize },

    #[error("argument out of range: {what}")]
    OutOfRange { what: String },

    #[error("path carries no atom log")]
    MissingAtomLog,

    #[error("operation requires a Levy-driven path")]
    NotLevyPath,

    #[error("delta = {delta} outside (0, 1/4)")]
    InvalidDelta { delta: f64 },

    #[error("sample set is empty")]
    EmptySample,

    #[error("paths do not share one configuration")]
    ConfigMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
