use thiserror::Error;

/// Errors raised by geometry, measure and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (unbounded body, wrong dimension, bad tag...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An argument outside the domain of a formula (p <= -1, Gamma poles, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A measure whose weighted surface area vanishes in some direction.
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    /// Solver failure or quadrature that did not converge.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn numeric<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numeric(msg.into()))
}
