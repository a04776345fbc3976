//! Monte Carlo experiments that check the finite-sample bounds and
//! reproduce the failure of plain kNN under asymmetric label noise.
//!
//! Replicates are independent: each one draws from its own stream seeded by
//! `(master_seed, n, replicate)`, and results are collected by replicate
//! index, so outputs are byte-identical for any number of worker threads.

pub mod config;
pub mod cv;
pub mod experiments;
pub mod result;

pub use config::{ExperimentConfig, KPolicy};
pub use cv::{cross_validate_k, cross_validate_k_report, geometric_grid, CvReport};
pub use experiments::{
    corrupted_sample, log_log_slope, mc_slack, run_ball_experiment, run_ball_measure_experiment, run_inconsistency_demo,
    run_max_experiment, run_pointwise_experiment, run_rate_experiment,
};
pub use result::{summary_path, Check, ExperimentResult, GridSummary, Record, Summary};
