//! Configured experiment runs and their reports.

pub mod config;
pub mod runner;

pub use config::{Config, Experiment, FamilySpec, FunctionSpec};
pub use runner::{run, run_experiment, write_outputs, RunOutput};
