//! Seeded 2D simulator of a robot swarm classifying the majority floor color of a
//! 36×36 arena of black and white tiles.
//!
//! Robots random-walk, sample the tile under them every space unit, form an
//! individual opinion and then agree on a collective decision through one of three
//! controllers. With interference on, robots also avoid each other, which costs
//! exploration time and samples.

pub mod env;
pub mod error;
pub mod experiment;
pub mod robot;

pub use env::{generate_environment, Environment, Geometry, ARENA, TILES};
pub use error::{Result, SimError};
pub use experiment::{
    derive_seed, estimate_individual_accuracy, run_batch, run_experiment, scalability_curve,
    summarize, AccuracyEstimate, Controller, CurvePoint, ExperimentConfig, Outcome, RunRecord,
    RunSpec, DEFAULT_MAX_TIMESTEPS,
};
pub use robot::{Motion, MotionParams, Phase, Robot, SamplingRule, StepEvent};
