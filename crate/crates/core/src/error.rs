use thiserror::Error;

/// Errors surfaced by the counting, numerics and sampling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MelonError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument {z} is the pole of Z_2a (pole at {pole})")]
    Pole { z: f64, pole: f64 },

    #[error("series did not converge within {max_terms} terms ({what})")]
    NonConvergence { what: String, max_terms: usize },

    #[error("quadrature failed to reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { tol: f64, err: f64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

impl MelonError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MelonError::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, MelonError>;
