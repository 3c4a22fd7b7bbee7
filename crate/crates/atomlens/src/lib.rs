//! Configuration, file formats and the `atomlens` command line around
//! [`atomlens_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod lines;

pub use config::RunConfig;
pub use error::{CliError, Result};
