//! Experiment harness: configuration loading, parameter sweeps and
//! validation reports, all emitted as CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{
    cmd_analyze, cmd_optimize, cmd_simulate, cmd_sweep_qoe_methods, cmd_sweep_recovery_vs_loss,
    cmd_sweep_recovery_vs_redundancy, cmd_validate, cmd_validate_with, Validation,
};
pub use config::{load_config, ExperimentConfig, Overrides};
pub use error::CliError;
pub use table::{Cell, Table};
