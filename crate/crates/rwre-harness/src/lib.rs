//! Experiment harness for the RWRE toolkit: configuration, commands,
//! reports, and the verification suites behind the `rwre` binary.

#![forbid(unsafe_code)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

pub use commands::{CommandOutput, CommonOpts, OutputFormat};
pub use config::{Config, parse_config};
pub use error::{HarnessError, Result};
pub use report::RunReport;
