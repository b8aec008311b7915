//! Configuration, experiment driver and CSV output for the `ssls` command.

pub mod config;
mod error;
pub mod experiment;
pub mod output;

pub use config::{Experiment, ExperimentConfig, Method, Model};
pub use error::{CliError, Result};
pub use experiment::{compare_methods, run_experiment, run_method, simulate, MethodRun};
