//! Command-line front end for `lexcvar`: run configuration, solution
//! persistence and the `solve`, `evaluate`, `compare`, `gen-domain` and
//! `validate` commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod docs;
pub mod error;

pub use args::{Cli, Command, RunArgs};
pub use config::RunConfig;
pub use error::CliError;
