//! Command-line front end and HTTP service for `poresim-core`.

pub mod cli;
pub mod error;
pub mod preview;
pub mod service;

pub use cli::{run, Cli};
pub use error::CliError;
