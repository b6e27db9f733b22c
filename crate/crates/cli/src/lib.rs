//! Command-line front end for the renewal measure engines.

pub mod args;
pub mod config;
pub mod run;

pub use config::{Command, Format, RunConfig};
pub use run::{run, Failure, Outcome};
