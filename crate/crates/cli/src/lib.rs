//! Command implementations behind the `regor` binary. They live in a library
//! so integration and acceptance tests can drive them in-process.

pub mod commands;
pub mod error;

pub use error::{CliError, ErrorKind};
