//! Declarative experiment runner: one TOML config per run, CSV/JSON outputs
//! with gnuplot scripts, and a manifest written last as the completion
//! marker.

pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, Kind};
pub use error::{CliError, Diagnostic};
pub use manifest::RunManifest;
pub use run::{run, RunOptions, RunOutcome};
pub use validate::validate;
