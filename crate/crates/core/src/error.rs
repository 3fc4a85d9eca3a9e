use thiserror::Error;

use crate::storage::A1Case;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A state-of-charge update left the battery outside its limits. This
    /// always indicates a policy or clipping bug.
    #[error("state error: {0}")]
    State(String),

    #[error("salvage rate violates the sandwich condition ({case}); use the relaxed policy")]
    A1Violated { case: A1Case },

    #[error("dynamic program too large: {states} states exceeds cap {cap}; {hint}")]
    ResourceGuard { states: usize, cap: usize, hint: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("gap undefined: bound is zero")]
    UndefinedGap,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
