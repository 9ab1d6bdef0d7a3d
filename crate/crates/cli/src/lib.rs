//! Configuration-driven front end for the `allen_cahn` toolkit.

pub mod commands;
pub mod config;
pub mod hypotheses;
pub mod report;
pub mod svg;

pub use commands::{run, Command};
pub use config::RunConfig;
