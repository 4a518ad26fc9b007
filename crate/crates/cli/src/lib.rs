//! Experiment runner for `qtransport`: TOML or flag configuration, the
//! build → decompose → transport → analyse pipeline, and reproducible
//! artifacts with a checksummed manifest.
//!
//! Every run writes into one directory with fixed file names:
//! `series.csv`, `spectrum.csv`, `degeneracies.csv`, `report.txt`,
//! `deltap.csv` and `manifest.txt`, plus `chi.csv` and `dos.csv` on request.

mod args;
pub mod config;
mod error;
pub mod manifest;
pub mod presets;
pub mod run;

pub use args::{execute, Outcome};
pub use config::{ExperimentConfig, Source};
pub use error::{CliError, Result};
pub use manifest::RunManifest;
pub use presets::{preset, PRESETS};
pub use run::{fit_series, run_experiment, run_stage, Stage};
