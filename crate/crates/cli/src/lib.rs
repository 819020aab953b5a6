//! Command-line driver for `phasespace-core`.
//!
//! Every subcommand reads JSON inputs, writes one data artifact (CSV or
//! JSON) plus a `<out>.meta.json` provenance sidecar, and reports failures
//! through [`CliError::exit_code`]. Floats are printed with 17 significant
//! digits so identical inputs give byte-identical files.

pub mod config;
pub mod error;
pub mod format;
pub mod run;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use run::{run, RunReport};
