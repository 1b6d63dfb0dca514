//! Trade-off benchmarking against a prediction-mutation baseline.
//!
//! Every (fairness, utility) metric pair gets its own baseline curve. A model
//! is placed relative to the original model (the anchor) and, when it trades
//! utility for fairness, relative to the curve.

mod baseline;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{
    build_baseline, build_baselines, mutate, mutation_count, BaselineCurve, CurvePoint, DEFAULT_REPETITIONS, DEGREES,
};
pub use table::{
    read_region_table, read_scatter, write_region_table, write_scatter, RegionRow, ScatterRow, MEAN_PAIR,
};

use crate::measurement::{MeasurementError, MetricKind, MetricName};
use crate::metrics::{group_rates, MetricError, PredictionBundle};

/// Coordinates closer than this to the anchor count as not better.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("baseline curve: {0}")]
    Curve(String),
    #[error("no labels to aggregate")]
    Empty,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("table format: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricPair {
    pub fairness: MetricName,
    pub utility: MetricName,
}

impl MetricPair {
    pub fn new(fairness: MetricName, utility: MetricName) -> Result<Self, BenchError> {
        if fairness.kind() != MetricKind::Fairness || utility.kind() != MetricKind::Utility {
            return Err(BenchError::Format(format!("{fairness}/{utility} is not a fairness/utility pair")));
        }
        Ok(Self { fairness, utility })
    }

    /// The 5 × 3 benchmark pairs, fairness-major.
    pub fn all() -> Vec<MetricPair> {
        MetricName::BENCH_FAIRNESS
            .iter()
            .flat_map(|&fairness| MetricName::UTILITY.iter().map(move |&utility| MetricPair { fairness, utility }))
            .collect()
    }

    /// `SPD-ACC` style identifier, also used as a file stem.
    pub fn id(&self) -> String {
        format!("{}-{}", self.fairness, self.utility)
    }
}

impl fmt::Display for MetricPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.fairness, self.utility)
    }
}

impl FromStr for MetricPair {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (f, u) = s
            .split_once('-')
            .ok_or_else(|| BenchError::Format(format!("metric pair {s:?} is not FAIRNESS-UTILITY")))?;
        MetricPair::new(f.parse()?, u.parse()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    #[serde(rename = "win-win")]
    WinWin,
    #[serde(rename = "good")]
    Good,
    #[serde(rename = "inverted")]
    Inverted,
    #[serde(rename = "bad")]
    Bad,
    #[serde(rename = "lose-lose")]
    LoseLose,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 5] = [
        RegionLabel::WinWin,
        RegionLabel::Good,
        RegionLabel::Inverted,
        RegionLabel::Bad,
        RegionLabel::LoseLose,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::WinWin => "win-win",
            RegionLabel::Good => "good",
            RegionLabel::Inverted => "inverted",
            RegionLabel::Bad => "bad",
            RegionLabel::LoseLose => "lose-lose",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionLabel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionLabel::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| BenchError::Format(format!("unknown region {s:?}")))
    }
}

/// Region of the processed point `(u, f)` relative to `curve`.
///
/// A point within [`TIE_EPS`] of the anchor on both axes is labelled bad.
pub fn classify(point: (f64, f64), curve: &BaselineCurve) -> RegionLabel {
    let (u, f) = point;
    let (u0, f0) = curve.anchor;
    if (u - u0).abs() <= TIE_EPS && (f - f0).abs() <= TIE_EPS {
        log::debug!("{}: point ({u}, {f}) ties the anchor", curve.pair);
        return RegionLabel::Bad;
    }
    let better_u = u > u0 + TIE_EPS;
    let better_f = f > f0 + TIE_EPS;
    match (better_u, better_f) {
        (true, true) => RegionLabel::WinWin,
        (true, false) => RegionLabel::Inverted,
        (false, false) => RegionLabel::LoseLose,
        (false, true) => {
            if f > curve.interpolate(u) + TIE_EPS {
                RegionLabel::Good
            } else {
                RegionLabel::Bad
            }
        }
    }
}

/// Share of each region, indexed by [`RegionLabel::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegionProportions(pub [f64; 5]);

impl RegionProportions {
    pub fn from_labels(labels: &[RegionLabel]) -> Result<Self, BenchError> {
        if labels.is_empty() {
            return Err(BenchError::Empty);
        }
        let mut counts = [0usize; 5];
        for l in labels {
            counts[l.index()] += 1;
        }
        let n = labels.len() as f64;
        Ok(Self(counts.map(|c| c as f64 / n)))
    }

    pub fn get(&self, region: RegionLabel) -> f64 {
        self.0[region.index()]
    }

    /// Unweighted mean of several proportion vectors.
    pub fn mean(items: &[RegionProportions]) -> Result<Self, BenchError> {
        if items.is_empty() {
            return Err(BenchError::Empty);
        }
        let mut sum = [0.0; 5];
        for p in items {
            for (s, v) in sum.iter_mut().zip(p.0) {
                *s += v;
            }
        }
        Ok(Self(sum.map(|s| s / items.len() as f64)))
    }
}

/// Per-pair region shares and their mean over pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTable {
    pub per_pair: Vec<(MetricPair, RegionProportions)>,
    pub mean: RegionProportions,
}

/// Aggregates labels of many models over many pairs.
pub fn aggregate(labels: &[(MetricPair, RegionLabel)]) -> Result<RegionTable, BenchError> {
    let mut pairs: Vec<MetricPair> = labels.iter().map(|(p, _)| *p).collect();
    pairs.sort();
    pairs.dedup();
    let per_pair = pairs
        .into_iter()
        .map(|pair| {
            let of_pair: Vec<RegionLabel> = labels.iter().filter(|(p, _)| *p == pair).map(|(_, l)| *l).collect();
            RegionProportions::from_labels(&of_pair).map(|props| (pair, props))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean = RegionProportions::mean(&per_pair.iter().map(|(_, p)| *p).collect::<Vec<_>>())?;
    Ok(RegionTable { per_pair, mean })
}

/// One model placed against one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedModel {
    pub model_id: String,
    pub u: f64,
    pub f: f64,
    pub region: RegionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub curves: Vec<BaselineCurve>,
    /// Same order as `curves`.
    pub placed: Vec<Vec<PlacedModel>>,
}

impl BenchOutcome {
    pub fn labels(&self) -> Vec<(MetricPair, RegionLabel)> {
        self.curves
            .iter()
            .zip(&self.placed)
            .flat_map(|(c, models)| models.iter().map(move |m| (c.pair, m.region)))
            .collect()
    }

    pub fn table(&self) -> Result<RegionTable, BenchError> {
        aggregate(&self.labels())
    }
}

/// Builds baselines from `original` and classifies every candidate on every pair.
pub fn bench(
    original: &PredictionBundle,
    candidates: &[(String, PredictionBundle)],
    pairs: &[MetricPair],
    repetitions: usize,
    seed: u64,
) -> Result<BenchOutcome, BenchError> {
    if candidates.is_empty() {
        return Err(BenchError::Empty);
    }
    let curves = build_baselines(original, pairs, repetitions, seed)?;
    let mut placed: Vec<Vec<PlacedModel>> = vec![Vec::with_capacity(candidates.len()); curves.len()];
    for (model_id, bundle) in candidates {
        let rates = group_rates(bundle)?;
        for (curve, out) in curves.iter().zip(placed.iter_mut()) {
            let u = curve.pair.utility.processed(bundle, &rates)?.value;
            let f = curve.pair.fairness.processed(bundle, &rates)?.value;
            out.push(PlacedModel { model_id: model_id.clone(), u, f, region: classify((u, f), curve) });
        }
    }
    Ok(BenchOutcome { curves, placed })
}
