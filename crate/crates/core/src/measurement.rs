//! Standardization of heterogeneous metrics onto a common higher-is-better
//! `[0, 1]` scale, their aggregation into comprehensive fairness (F̄) and
//! utility (Ū) measurements, and the weighted reward.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{self, GroupRates, MetricError, PredictionBundle};

/// Raw values within this distance outside a metric's bounds are clamped.
pub const RANGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("{metric} value {value} outside [{min}, {max}]")]
    OutOfRange { metric: String, value: f64, min: f64, max: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Fairness,
    Utility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    /// Best at `ideal`, worse in both directions.
    NonMonotonic { ideal: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub kind: MetricKind,
    pub monotonicity: Monotonicity,
    pub min: f64,
    pub max: f64,
}

impl MetricSpec {
    pub fn new(
        name: impl Into<String>,
        kind: MetricKind,
        monotonicity: Monotonicity,
        min: f64,
        max: f64,
    ) -> Result<Self, MeasurementError> {
        let name = name.into();
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(MeasurementError::Config(format!("{name}: need min < max, got [{min}, {max}]")));
        }
        if let Monotonicity::NonMonotonic { ideal } = monotonicity {
            if !(min < ideal && ideal < max) {
                return Err(MeasurementError::Config(format!(
                    "{name}: ideal {ideal} must lie strictly inside [{min}, {max}]"
                )));
            }
        }
        Ok(Self { name, kind, monotonicity, min, max })
    }

    /// Whether a non-monotonic metric's ideal point is the midpoint of its range.
    pub fn is_symmetric(&self) -> bool {
        match self.monotonicity {
            Monotonicity::NonMonotonic { ideal } => {
                (ideal - 0.5 * (self.min + self.max)).abs() <= 1e-12 * (self.max - self.min)
            }
            _ => false,
        }
    }
}

/// A metric value mapped onto `[0, 1]` where 1 is best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedScore {
    pub metric: String,
    pub value: f64,
}

pub fn standardize(raw: f64, spec: &MetricSpec) -> Result<ProcessedScore, MeasurementError> {
    let (min, max) = (spec.min, spec.max);
    if raw.is_nan() || raw < min - RANGE_TOLERANCE || raw > max + RANGE_TOLERANCE {
        return Err(MeasurementError::OutOfRange {
            metric: spec.name.clone(),
            value: raw,
            min,
            max,
        });
    }
    let x = raw.clamp(min, max);
    let value = match spec.monotonicity {
        Monotonicity::Increasing => (x - min) / (max - min),
        Monotonicity::Decreasing => 1.0 - (x - min) / (max - min),
        Monotonicity::NonMonotonic { ideal } if spec.is_symmetric() => {
            1.0 - 2.0 * (x - ideal).abs() / (max - min)
        }
        Monotonicity::NonMonotonic { ideal } => {
            if x <= ideal {
                (x - min) / (ideal - min)
            } else {
                (x - max) / (ideal - max)
            }
        }
    };
    Ok(ProcessedScore {
        metric: spec.name.clone(),
        value: value.clamp(0.0, 1.0),
    })
}

/// Mean of processed scores.
pub fn comprehensive(scores: &[ProcessedScore]) -> Result<f64, MeasurementError> {
    if scores.is_empty() {
        return Err(MeasurementError::Config("no metrics to aggregate".into()));
    }
    Ok(scores.iter().map(|s| s.value).sum::<f64>() / scores.len() as f64)
}

/// `λ·F̄ + (1 − λ)·Ū`
pub fn reward(f_bar: f64, u_bar: f64, lambda: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&lambda));
    lambda * f_bar + (1.0 - lambda) * u_bar
}

/// The built-in metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricName {
    Di,
    Spd,
    Eod,
    Aod,
    Erd,
    Ma,
    Mb,
    Acc,
    F1,
    Auc,
}

impl MetricName {
    pub const ALL: [MetricName; 10] = [
        MetricName::Ma,
        MetricName::Mb,
        MetricName::Di,
        MetricName::Spd,
        MetricName::Eod,
        MetricName::Aod,
        MetricName::Erd,
        MetricName::Acc,
        MetricName::F1,
        MetricName::Auc,
    ];

    /// The five established fairness metrics used for trade-off benchmarking.
    pub const BENCH_FAIRNESS: [MetricName; 5] =
        [MetricName::Di, MetricName::Spd, MetricName::Eod, MetricName::Aod, MetricName::Erd];

    pub const UTILITY: [MetricName; 3] = [MetricName::Acc, MetricName::F1, MetricName::Auc];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::Di => "DI",
            MetricName::Spd => "SPD",
            MetricName::Eod => "EOD",
            MetricName::Aod => "AOD",
            MetricName::Erd => "ERD",
            MetricName::Ma => "Ma",
            MetricName::Mb => "Mb",
            MetricName::Acc => "ACC",
            MetricName::F1 => "F1",
            MetricName::Auc => "AUC",
        }
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            MetricName::Acc | MetricName::F1 | MetricName::Auc => MetricKind::Utility,
            _ => MetricKind::Fairness,
        }
    }

    pub fn spec(&self) -> MetricSpec {
        use Monotonicity::*;
        let (monotonicity, min, max) = match self {
            MetricName::Di
            | MetricName::Ma
            | MetricName::Mb
            | MetricName::Acc
            | MetricName::F1
            | MetricName::Auc => (Increasing, 0.0, 1.0),
            MetricName::Spd => (Decreasing, 0.0, 1.0),
            MetricName::Eod | MetricName::Aod => (NonMonotonic { ideal: 0.0 }, -1.0, 1.0),
            MetricName::Erd => (NonMonotonic { ideal: 0.0 }, -2.0, 2.0),
        };
        MetricSpec {
            name: self.as_str().to_string(),
            kind: self.kind(),
            monotonicity,
            min,
            max,
        }
    }

    /// The metric's raw value on a bundle. `rates` must come from the same bundle.
    pub fn raw(&self, bundle: &PredictionBundle, rates: &GroupRates) -> Result<f64, MetricError> {
        match self {
            MetricName::Di => Ok(metrics::di(rates)),
            MetricName::Spd => Ok(metrics::spd(rates)),
            MetricName::Eod => metrics::eod(rates),
            MetricName::Aod => metrics::aod(rates),
            MetricName::Erd => metrics::erd(rates),
            MetricName::Ma => metrics::m_a(rates),
            MetricName::Mb => metrics::m_b(rates),
            MetricName::Acc => Ok(metrics::accuracy(bundle)),
            MetricName::F1 => Ok(metrics::f1(bundle)),
            MetricName::Auc => metrics::auc(bundle),
        }
    }

    pub fn processed(&self, bundle: &PredictionBundle, rates: &GroupRates) -> Result<ProcessedScore, MeasurementError> {
        standardize(self.raw(bundle, rates)?, &self.spec())
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = MeasurementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = match s.trim().to_ascii_lowercase().as_str() {
            "di" => MetricName::Di,
            "spd" => MetricName::Spd,
            "eod" => MetricName::Eod,
            "aod" => MetricName::Aod,
            "erd" => MetricName::Erd,
            "ma" | "m_a" => MetricName::Ma,
            "mb" | "m_b" => MetricName::Mb,
            "acc" | "accuracy" => MetricName::Acc,
            "f1" => MetricName::F1,
            "auc" => MetricName::Auc,
            other => return Err(MeasurementError::Config(format!("unknown metric {other:?}"))),
        };
        Ok(name)
    }
}

impl TryFrom<String> for MetricName {
    type Error = MeasurementError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MetricName> for String {
    fn from(m: MetricName) -> Self {
        m.as_str().to_string()
    }
}

/// Which metrics feed F̄ and Ū, and the fairness weight λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub fairness: Vec<MetricName>,
    pub utility: Vec<MetricName>,
    pub lambda: f64,
}

impl Default for MeasurementConfig {
    /// `0.5·(Ma + Mb)/2 + 0.5·AUC`
    fn default() -> Self {
        Self {
            fairness: vec![MetricName::Ma, MetricName::Mb],
            utility: vec![MetricName::Auc],
            lambda: 0.5,
        }
    }
}

impl MeasurementConfig {
    pub fn new(fairness: Vec<MetricName>, utility: Vec<MetricName>, lambda: f64) -> Result<Self, MeasurementError> {
        let config = Self { fairness, utility, lambda };
        config.validate()?;
        Ok(config)
    }

    /// Single fairness metric SPD with accuracy, as used by single-metric rewards.
    pub fn spd_accuracy() -> Self {
        Self {
            fairness: vec![MetricName::Spd],
            utility: vec![MetricName::Acc],
            lambda: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), MeasurementError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(MeasurementError::Config(format!("lambda {} not in [0, 1]", self.lambda)));
        }
        for (set, kind) in [(&self.fairness, MetricKind::Fairness), (&self.utility, MetricKind::Utility)] {
            if set.is_empty() {
                return Err(MeasurementError::Config(format!("no {kind:?} metrics configured")));
            }
            for (i, m) in set.iter().enumerate() {
                if m.kind() != kind {
                    return Err(MeasurementError::Config(format!("{m} is not a {kind:?} metric")));
                }
                if set[..i].contains(m) {
                    return Err(MeasurementError::Config(format!("{m} listed twice")));
                }
            }
        }
        Ok(())
    }

    /// Short identifier such as `Ma+Mb|AUC`.
    pub fn label(&self) -> String {
        let join = |v: &[MetricName]| v.iter().map(|m| m.as_str()).collect::<Vec<_>>().join("+");
        format!("{}|{}", join(&self.fairness), join(&self.utility))
    }

    /// True for the {Ma, Mb} / {AUC} combination (any order).
    pub fn is_default_metrics(&self) -> bool {
        let mut f = self.fairness.clone();
        f.sort();
        f == [MetricName::Ma, MetricName::Mb] && self.utility == [MetricName::Auc]
    }

    pub fn evaluate(&self, bundle: &PredictionBundle) -> Result<Measurement, MeasurementError> {
        let rates = metrics::group_rates(bundle)?;
        let score = |set: &[MetricName]| -> Result<Vec<ProcessedScore>, MeasurementError> {
            set.iter().map(|m| m.processed(bundle, &rates)).collect()
        };
        let fairness = score(&self.fairness)?;
        let utility = score(&self.utility)?;
        let f_bar = comprehensive(&fairness)?;
        let u_bar = comprehensive(&utility)?;
        Ok(Measurement {
            f_bar,
            u_bar,
            reward: reward(f_bar, u_bar, self.lambda),
            fairness,
            utility,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub f_bar: f64,
    pub u_bar: f64,
    pub reward: f64,
    pub fairness: Vec<ProcessedScore>,
    pub utility: Vec<ProcessedScore>,
}
