//! Configuration and subcommands behind the `crlab` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_construct, cmd_kahler, cmd_report, cmd_sweep, run, Failure, Outcome};
pub use config::{Pipeline, RunConfig};
