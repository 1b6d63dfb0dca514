//! Experiment runner: prepare → train-base → mitigate → bench → report.

pub mod ablate;
pub mod artifacts;
pub mod error;
pub mod spec;
pub mod stages;

pub use ablate::{cmd_ablate, Ablation, AblationRow};
pub use error::{CliError, CliResult, Stage};
pub use spec::{Experiment, ExperimentSpec, Grid, Overrides, DATA_DIR_ENV};
pub use stages::{cmd_bench, cmd_mitigate, cmd_prepare, cmd_report, cmd_run, cmd_train_base, Manifest, Report, RunSummary};
