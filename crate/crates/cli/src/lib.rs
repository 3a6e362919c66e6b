//! JSON-configured experiment runner over `ergodic-core`.
//!
//! A config names a space, a function, an operator or point system, and
//! checkpoints; a subcommand picks the engine. Outputs are CSV or JSON
//! files, each starting with the seed, written atomically under
//! `--output-dir`.
//!
//! Exit status: 0 success, 2 invalid input or config, 3 budget exceeded,
//! 4 internal consistency failure, 1 anything else.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use validate::{validate, validate_for, Diagnostic};
