//! Experiment runner behind the `imrc` binary: configuration, subcommands and
//! artifact writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_dof, cmd_montecarlo, cmd_paper_fig, cmd_sweep, parse_window, DofEntry};
pub use config::{ExperimentConfig, LabeledScheme, SchemeSpec, SEED_ENV};
pub use error::CliError;
