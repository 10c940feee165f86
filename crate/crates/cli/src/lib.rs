//! Library surface of the command-line driver: configuration schema, the
//! subcommand implementations, and the CSV/JSON output layer. The `mfg`
//! binary is a thin argument-parsing wrapper over this.

pub mod commands;
pub mod config;
pub mod output;
