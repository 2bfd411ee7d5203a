use thiserror::Error;

/// Errors surfaced by the prediction library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Target policy puts probability on an action the behavior never takes.
    #[error("coverage violation: pi({action}|{state}) = {pi} > 0 but mu = 0")]
    CoverageViolation {
        state: String,
        action: usize,
        pi: f64,
    },

    #[error("all stored importance ratios are zero")]
    DegenerateWeights,

    #[error("buffer holds no transitions")]
    EmptyBuffer,

    #[error("requested statistics over zero samples")]
    EmptySample,

    #[error("state ({x}, {y}) lies outside the feature bounds")]
    OutOfBounds { x: f64, y: f64 },

    #[error("update direction contains a non-finite entry")]
    NonFiniteUpdate,

    #[error("buffer does not satisfy the variance-gap premise: {reason}")]
    PremiseViolated { reason: String },

    #[error("value iteration did not converge within {iterations} sweeps")]
    NonConvergence { iterations: u64 },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("environment stepped from an invalid state")]
    InvalidState,
}

pub type Result<T> = std::result::Result<T, Error>;
