//! Configuration, presets, file formats and command execution for the
//! `philap` solver.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{ConfigError, ProblemConfig};
pub use run::{run, Command, RunArgs};
