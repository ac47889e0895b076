//! Reproducible experiments on invariant metrics, driven by JSON configs and
//! written out as `report.json` plus `samples.csv`.

pub mod cache;
pub mod config;
pub mod experiments;
pub mod registry;
pub mod report;

pub use cache::Cache;
pub use config::{parse_config, ConfigError, ExperimentConfig, Method};
pub use experiments::{run_experiment, run_experiment_with, RunError};
pub use registry::{list_experiments, list_table, Experiment};
pub use report::{emit_report, Cell, Report, Status, Table, Verdict};
