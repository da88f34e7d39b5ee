//! Command-line front end: argument handling, layer tables and report
//! rendering for the `gemmsim` binary.

pub mod commands;
mod error;
pub mod formatting;
pub mod report;
pub mod workload;

pub use commands::{execute, load_profile, Cli, Command, Status};
pub use error::CliError;
pub use formatting::{render, sig6, Format};
pub use report::{ReportBody, ReportDocument};
