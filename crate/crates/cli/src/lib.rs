//! Command-line experiments for `grushin-core`: configuration, deterministic
//! CSV/JSON reports, SVG line charts and the `verify` invariant suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

pub use config::Config;
pub use error::{CliError, CliResult};
