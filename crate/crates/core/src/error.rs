use thiserror::Error;

use crate::pqnorm::GramSolution;

/// Errors raised by the solvers and oracles.
#[derive(Debug, Error)]
pub enum Error {
    /// Lengths or dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input is valid in shape but degenerate (zero tensor, zero block, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A size or evaluation budget would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The relaxation solver hit its iteration cap. The best feasible iterate
    /// is attached so callers can still use it.
    #[error("relaxation solver did not converge in {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<GramSolution>,
    },

    /// Malformed tensor file or exponent string.
    #[error("parse error: {0}")]
    Parse(String),

    /// A guarantee that holds by construction failed at runtime.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
