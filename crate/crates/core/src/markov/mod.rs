//! The Parent-Changing Markov chain and the analytics of its log-sum-exp
//! relaxation.

pub mod analytics;
pub mod chain;

pub use analytics::{
    approximation_gap, log_sum_exp_value, perturbation_bound, perturbation_tv_bound,
    stationary_distribution, transition_prob, tv_distance, AnalyticsError,
};
pub use chain::{
    candidate_parents, estimate_phi, run, step, write_trajectory_csv, Estimator, MarkovConfig,
    MarkovError, MarkovState, StepEvent, Trajectory, TransitionRecord,
};
