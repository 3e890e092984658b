use thiserror::Error;

use crate::lagrangian::{ConvergenceTrace, FlowField};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent user input.
    #[error("input error: {0}")]
    Input(String),

    /// A discrete field violates a structural invariant (monotonicity, inversion).
    #[error("state error: {0}")]
    State(String),

    #[error("newton did not converge after {} iterations (last residual {:.3e})", .trace.iterations(), .trace.last_residual())]
    NonConvergence {
        trace: ConvergenceTrace,
        last: Box<FlowField>,
    },

    #[error("newton step rejected at iteration {iteration}: {reason}")]
    Step {
        iteration: usize,
        reason: String,
        trace: ConvergenceTrace,
        last: Box<FlowField>,
    },

    #[error("continuation level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Convergence trace carried by solver failures, looking through level annotations.
    pub fn trace(&self) -> Option<&ConvergenceTrace> {
        match self {
            Error::NonConvergence { trace, .. } | Error::Step { trace, .. } => Some(trace),
            Error::Level { source, .. } => source.trace(),
            _ => None,
        }
    }

    /// Last iterate carried by solver failures.
    pub fn last_iterate(&self) -> Option<&FlowField> {
        match self {
            Error::NonConvergence { last, .. } | Error::Step { last, .. } => Some(last),
            Error::Level { source, .. } => source.last_iterate(),
            _ => None,
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        self.trace().is_some()
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
