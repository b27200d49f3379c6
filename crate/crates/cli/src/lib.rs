//! Command-line driver: run files, experiment dispatch and output writing.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_args, parse_config, Cli, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{run, Outcome};
