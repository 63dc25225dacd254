use thiserror::Error;

/// Errors raised by the models, the allocator, the oracle and the fitter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {family} curve: {reason}")]
    InvalidCurve {
        family: &'static str,
        reason: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{agents} agents cannot cover {tasks} tasks (need at least one agent per task)")]
    TooFewAgents { agents: usize, tasks: usize },
    #[error("task set must contain at least one task")]
    EmptyTaskSet,
    #[error("counts vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("enumeration of {count} candidates exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("arithmetic overflow computing {0}")]
    Overflow(String),
    #[error("need at least {needed} distinct group sizes to fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("input is empty")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, Error>;
