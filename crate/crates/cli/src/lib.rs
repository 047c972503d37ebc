//! Experiment harness for the `msns` solvers: `gen`, `solve`, `cv`, `bench`
//! and `estimate` subcommands driven by a TOML run configuration.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::CliError;
pub use config::RunConfig;
