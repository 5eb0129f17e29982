//! Batch experiments: scenario files, the algorithm roster, CSV output and
//! confidence intervals.

pub mod config;
pub mod runner;
pub mod stats;

pub use config::{Algorithm, ConfigError, DeadlineSpec, ExperimentConfig, ScenarioConfig, XAxis};
pub use runner::{
    run_experiment, run_scenario, summarize, write_outputs, write_results, write_summary,
    ExperimentRecord, RunError, RunOptions, SummaryRow,
};
pub use stats::{mean_ci95, t_quantile};
