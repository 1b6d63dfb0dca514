//! Improving the fairness-utility trade-off of small tabular classifiers.
//!
//! The crate is organised as a pipeline:
//!
//! - [`data`] loads a tabular CSV, binarizes label and sensitive attribute and
//!   produces deterministic train/tune/test splits.
//! - [`metrics`] computes subgroup rates and the raw fairness and utility metrics.
//! - [`measurement`] standardizes metrics to higher-is-better `[0, 1]` scores and
//!   aggregates them into comprehensive fairness/utility measurements and a reward.
//! - [`classifier`] holds the parameterized LR / linear SVM / MLP classifiers.
//! - [`mitigation`] runs the policy-gradient parameter-mutation loop and keeps the
//!   trade-off frontier of visited models.
//! - [`tradeoff`] benchmarks models against a prediction-mutation baseline and
//!   assigns trade-off regions.

pub mod classifier;
pub mod data;
pub mod measurement;
pub mod metrics;
pub mod mitigation;
pub mod seeding;
pub mod tradeoff;

pub use classifier::{ModelKind, ParamClassifier, TrainSettings};
pub use data::{TaskConfig, TaskDataset};
pub use measurement::{MeasurementConfig, MetricName};
pub use metrics::{GroupRates, PredictionBundle};
pub use mitigation::{MitigationSettings, MitigationRun};
pub use tradeoff::{MetricPair, RegionLabel};
