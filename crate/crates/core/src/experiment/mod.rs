//! Experiment orchestration: configuration, pipelines and persisted reports.

mod config;
mod pipeline;

pub use config::{parse_config, Command, ExperimentConfig, Law, KEYS};
pub use pipeline::{
    exit_code, fmt_f64, run_experiment, worker_count, ExperimentReport, SeedSummary, BALAYAGE_TOL, GREEN_BAND,
    IDENTITY_TOL,
};
