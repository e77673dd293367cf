//! Command-line front end for regime-switching entropic risk: configuration,
//! the calibration, simulation and sensitivity commands, and their output files.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{Overrides, Report, Run};
pub use config::{Model, RunConfig};
