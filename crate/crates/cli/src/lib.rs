//! Experiment plumbing for the `psdid` binary: JSON configs, CSV/JSON
//! artifacts and the acceptance suites behind `psdid verify`.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod suites;

pub use error::{CliError, ExitCode};
