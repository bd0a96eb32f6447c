//! The `binsel` workbench: dataset files, model snapshots, reports and the
//! command implementations behind the binary.

pub mod args;
pub mod commands;
pub mod dataset_file;
pub mod error;
pub mod report;
pub mod snapshot;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};
