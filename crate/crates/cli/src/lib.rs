//! Command-line front end: `train`, `eval`, `plan` and `verify`.
//!
//! Each run prints a human-readable report, writes its machine-readable
//! result to `--out`, and records a run manifest beside it.

pub mod args;
pub mod commands;
pub mod config;
pub mod exit;
pub mod inputs;
pub mod manifest;

pub use args::{Cli, Command};
pub use commands::run;
pub use exit::{CliError, Exit};
