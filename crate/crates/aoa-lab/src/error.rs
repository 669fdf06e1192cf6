//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A scenario file failed structural or semantic validation.
    #[error("scenario schema error: {0}")]
    Schema(String),

    /// The direct link never succeeds, so every age metric is infinite and
    /// there is nothing to optimize.
    #[error("direct link success probability is zero; average age is infinite everywhere")]
    Infeasible,

    /// A gradient was requested at a point where the closed form does not apply.
    #[error("gradient undefined at (q1={q1}, q2={q2}): {reason}")]
    GradientUndefined { q1: f64, q2: f64, reason: &'static str },

    /// The geometric age distribution is undefined when the reset event has
    /// probability zero.
    #[error("age distribution undefined: reset probability is zero")]
    NoResets,

    /// Cycle statistics need a minimum number of completed cycles to be
    /// meaningful.
    #[error("not enough actuation cycles: found {found}, need at least {required}")]
    InsufficientActuations { found: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
