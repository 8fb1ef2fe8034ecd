//! Library surface of the `gcae` command-line tool, exposed so integration
//! tests can drive the same code paths the binary does.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::CliError;
pub use config::RunConfig;
