use thiserror::Error;

use crate::solver::ReachWitness;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain an operation is defined on
    /// (valuation above `k`, constraint bound above `k`, thin-ness mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("model rejected: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state cap of {cap} exceeded during exploration")]
    StateCap { cap: usize },

    #[error("target set is not reached almost surely: {0}")]
    Assumption(ReachWitness),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) | Error::Domain(_) | Error::Io(_) => 2,
            Error::Precondition(_) | Error::Model(_) => 2,
            Error::Assumption(_) => 3,
            Error::Convergence { .. } | Error::StateCap { .. } => 4,
            Error::Internal(_) => 1,
        }
    }
}
