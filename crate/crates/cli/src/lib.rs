//! Library side of the `pyics` command-line tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod prepare;

pub use cli::run;
pub use error::{CliError, CliResult};
