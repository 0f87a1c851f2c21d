use thiserror::Error;

/// Errors raised by the simulation and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("kernel is not integrable: {0}")]
    NonIntegrable(String),

    #[error("assumption {assumption} fails: {detail}")]
    Assumption {
        assumption: &'static str,
        detail: String,
    },

    #[error("missing {0}")]
    Missing(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value on path {path} at step {step}")]
    NonFinite { path: u64, step: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// `true` for failures caused by numerics (blow-up, NaN, non-convergence)
    /// rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Numerical(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
