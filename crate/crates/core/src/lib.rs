//! Optimal allocation of homogeneous agents to independent tasks whose performance
//! follows a concave scalability curve.
//!
//! The collective performance of an allocation is the product of the per-task
//! performances. [`allocate`] computes a maximizer with a greedy marginal-gain loop
//! over a priority queue; [`brute_force`] enumerates every ordered partition and
//! serves as the optimality oracle on small instances. [`fit_usl`] fits the
//! universal scalability law to measured `(n, performance)` data.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below are the types used by the command line tool.

pub mod allocator;
pub mod error;
pub mod fitting;
pub mod oracle;
pub mod scalability;
pub mod scalar;
pub mod schema;

pub use allocator::{
    allocate, allocate_with_stats, collective_performance, sweep, Allocation, AllocationStats,
    AllocatorConfig, SweepRow, TaskSet, TieBreak,
};
pub use error::{Error, Result};
pub use fitting::{fit_usl, fit_usl_with, rmse, usl_gradient, usl_model, FitOptions, FitResult};
pub use oracle::{brute_force, count_partitions, penalized_score, Candidate, OracleConfig, OracleResult};
pub use schema::{AllocationRecord, TaskSetFile, TaskSpec};
pub use scalability::{
    marginal_gain_advance, marginal_gain_init, Family, GainState, ScalabilityCurve,
};
pub use scalar::{relative_difference, Scalar};

pub type Curve64 = ScalabilityCurve<f64>;
pub type Curve32 = ScalabilityCurve<f32>;
pub type GainState64 = GainState<f64>;
pub type TaskSet64 = TaskSet<f64>;
pub type TaskSet32 = TaskSet<f32>;
pub type Allocation64 = Allocation<f64>;
pub type AllocatorConfig64 = AllocatorConfig<f64>;
pub type OracleResult64 = OracleResult<f64>;
pub type FitResult64 = FitResult<f64>;
