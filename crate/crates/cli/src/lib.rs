//! Data-generating front end for the `fascopula` library.
//!
//! Every subcommand resolves an [`config::ExperimentConfig`] (defaults, then
//! an optional JSON file, then flags), writes its CSV/JSON outputs and
//! finishes with `config.json` and `manifest.json` in the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::Path;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::CliError;

/// Run a resolved experiment into `out_dir`; returns the written file names.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<String>, CliError> {
    let mut out = output::OutputDir::create(out_dir)?;
    experiments::run(cfg, &mut out)?;
    out.finish(cfg)
}
