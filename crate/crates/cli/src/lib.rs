//! Batch front end: configuration, mode runner, manifests and run diffs.

pub mod config;
pub mod plot;
pub mod report;
pub mod run;

pub use config::{Mode, RunConfig};
pub use report::{diff_runs, DiffReport, Manifest};
pub use run::{run, Exit, RunOutcome};
