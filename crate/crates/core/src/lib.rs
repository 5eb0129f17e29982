//! Deadline-constrained data-aggregation trees for wireless sensor networks.

pub mod assignment;
pub mod exact;
pub mod experiment;
pub mod init;
pub mod markov;
pub mod real;
pub mod schedule;
pub mod topology;
pub mod tree;

pub use real::Real;
pub use schedule::{optimal_schedule, Schedule, Slots};
pub use topology::{NodeId, Topology};
pub use tree::AggregationTree;

/// Chain parameters in double precision, as used by the experiment runner.
pub type MarkovConfigF64 = markov::MarkovConfig<f64>;
/// Chain parameters in single precision.
pub type MarkovConfigF32 = markov::MarkovConfig<f32>;
