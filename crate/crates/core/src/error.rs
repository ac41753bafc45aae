use thiserror::Error;

/// Errors raised by the engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation error: tail mass {tail_mass:.3e} exceeds bound {bound:.3e} ({context})")]
    Truncation {
        tail_mass: f64,
        bound: f64,
        context: String,
    },

    #[error("integration failure at t = {t:.6}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
