//! Batch front end for `dce-core`: run configurations, CSV tables and
//! text reports.

pub mod config;
pub mod error;
pub mod run;
pub mod table;

pub use config::{Cutoff, Horizon, Mode, Preset, RunConfig, OUTPUT_DIR_VAR};
pub use error::CliError;
pub use run::{convergence_check, execute, execute_check, render, run_simulation, sweep, Report};
