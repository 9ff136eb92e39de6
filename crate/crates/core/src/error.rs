use thiserror::Error;

use crate::state::StateKey;

/// Errors raised by model construction and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid row at state {state}: {reason}")]
    InvalidRow { state: StateKey, reason: String },

    #[error("state {0} is not part of the model's state space")]
    UnknownState(StateKey),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state {state} is reachable within {steps} steps but lies outside the truncation")]
    Escapes { state: StateKey, steps: usize },

    #[error("no convergence after {iterations} sweeps (residual {residual:e}, last mass {mass:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        mass: f64,
    },

    #[error("solver limit: {0}")]
    SolverLimit(String),

    #[error("test function rejected at state {state}: value {value}")]
    InvalidTestFunction { state: StateKey, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
