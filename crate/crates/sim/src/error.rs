use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("fill ratio must lie in (0.5, 1], got {0}")]
    FillRatio(f64),
    #[error("fill ratio {0} rounds to no white majority on a 36x36 grid")]
    NoMajority(f64),
    #[error("swarm size must be at least 1")]
    EmptySwarm,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("empty list of swarm sizes")]
    EmptySizes,
    #[error("invalid motion parameter: {0}")]
    Motion(String),
    #[error("cannot place {robots} robots at least {separation} su apart")]
    Placement { robots: usize, separation: f64 },
}

pub type Result<T> = std::result::Result<T, SimError>;
