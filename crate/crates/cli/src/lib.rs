//! Command-line front end: tracking single sequences, evaluating result
//! files, rendering synthetic sequences and running batch benchmarks.

pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod manifest;
pub mod report;

pub use error::{CliError, CliResult, EXIT_CONSISTENCY, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK};
