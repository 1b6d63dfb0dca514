//! Prediction-mutation baseline curves.
//!
//! For degree `k` in 0%, 10%, …, 100%, a uniformly chosen `k` share of the
//! original model's predictions is overwritten with its majority predicted
//! class, the metrics are recomputed, and (u, f) is averaged over repetitions.
//! Overwritten rows also get the most extreme score on the majority side, so a
//! fully mutated model is a constant predictor on both labels and scores.

use rand::seq::index::sample;
use rayon::prelude::*;

use super::{BenchError, MetricPair};
use crate::measurement::MetricName;
use crate::metrics::{group_rates, PredictionBundle};
use crate::seeding::{derive, substream, Stream};

pub const DEGREES: usize = 11;
pub const DEFAULT_REPETITIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Mutation share in percent.
    pub degree: u32,
    pub u: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCurve {
    pub pair: MetricPair,
    /// The unmutated model's processed (u, f).
    pub anchor: (f64, f64),
    points: Vec<CurvePoint>,
}

impl BaselineCurve {
    /// Builds a curve from points in any order; the anchor is the degree-0 point.
    pub fn new(pair: MetricPair, mut points: Vec<CurvePoint>) -> Result<Self, BenchError> {
        let anchor = points
            .iter()
            .find(|p| p.degree == 0)
            .map(|p| (p.u, p.f))
            .ok_or_else(|| BenchError::Curve("no degree-0 point".into()))?;
        if points.iter().any(|p| !(p.u.is_finite() && p.f.is_finite())) {
            return Err(BenchError::Curve("non-finite curve point".into()));
        }
        points.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.degree.cmp(&b.degree)));
        Ok(Self { pair, anchor, points })
    }

    /// Points sorted by utility.
    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn at_degree(&self, degree: u32) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.degree == degree)
    }

    /// Piecewise-linear fairness of the curve at utility `u`, flat beyond its ends.
    pub fn interpolate(&self, u: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if u <= first.u {
            return first.f;
        }
        if u >= last.u {
            return last.f;
        }
        let k = pts.partition_point(|p| p.u < u);
        let (lo, hi) = (pts[k - 1], pts[k]);
        if hi.u == lo.u {
            return hi.f;
        }
        lo.f + (hi.f - lo.f) * (u - lo.u) / (hi.u - lo.u)
    }
}

/// Index of the majority predicted class; ties go to the favorable class.
fn majority_class(predicted: &[bool]) -> bool {
    let positives = predicted.iter().filter(|&&p| p).count();
    2 * positives >= predicted.len()
}

/// Mutates `count` uniformly chosen rows of `original`.
pub fn mutate(original: &PredictionBundle, count: usize, seed: u64) -> PredictionBundle {
    let n = original.len();
    let class = majority_class(original.predicted());
    let scores = original.scores();
    let extreme = if class {
        scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        scores.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let mut predicted = original.predicted().to_vec();
    let mut new_scores = scores.to_vec();
    for i in sample(&mut substream(seed, Stream::Mutation), n, count.min(n)) {
        predicted[i] = class;
        new_scores[i] = extreme;
    }
    original
        .with_predictions(predicted, new_scores)
        .expect("mutation keeps bundle shape")
}

/// Number of rows mutated at `degree` percent of `n`, rounded half up.
pub fn mutation_count(n: usize, degree: u32) -> usize {
    (n * degree as usize + 50) / 100
}

/// Processed (u, f) of every pair on one bundle.
fn score_pairs(bundle: &PredictionBundle, pairs: &[MetricPair]) -> Result<Vec<(f64, f64)>, BenchError> {
    let rates = group_rates(bundle)?;
    let score = |m: MetricName| m.processed(bundle, &rates).map(|s| s.value);
    pairs
        .iter()
        .map(|p| Ok((score(p.utility)?, score(p.fairness)?)))
        .collect()
}

/// Scores a mutated bundle, falling back to its thresholded labels as scores
/// when a metric is undefined on the mutated scores.
fn score_mutated(bundle: &PredictionBundle, pairs: &[MetricPair]) -> Result<Vec<(f64, f64)>, BenchError> {
    score_pairs(bundle, pairs).or_else(|err| {
        log::warn!("mutated bundle unscorable ({err}); using label-threshold scores");
        let label_scores = bundle.predicted().iter().map(|&p| f64::from(u8::from(p))).collect();
        let fallback = bundle.with_predictions(bundle.predicted().to_vec(), label_scores)?;
        score_pairs(&fallback, pairs)
    })
}

/// Baselines for several metric pairs sharing the same mutated bundles.
pub fn build_baselines(
    original: &PredictionBundle,
    pairs: &[MetricPair],
    repetitions: usize,
    seed: u64,
) -> Result<Vec<BaselineCurve>, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::Curve("repetitions must be >= 1".into()));
    }
    let anchor = score_pairs(original, pairs)?;
    let cells: Vec<(u32, usize)> = (1..DEGREES as u32)
        .flat_map(|d| (0..repetitions).map(move |r| (d * 10, r)))
        .collect();
    let scored: Vec<Vec<(f64, f64)>> = cells
        .par_iter()
        .map(|&(degree, rep)| {
            let cell_seed = derive(derive(seed, u64::from(degree)), rep as u64);
            let mutated = mutate(original, mutation_count(original.len(), degree), cell_seed);
            score_mutated(&mutated, pairs)
        })
        .collect::<Result<_, _>>()?;

    let mut curves = Vec::with_capacity(pairs.len());
    for (k, &pair) in pairs.iter().enumerate() {
        let mut points = vec![CurvePoint { degree: 0, u: anchor[k].0, f: anchor[k].1 }];
        for (d, chunk) in scored.chunks(repetitions).enumerate() {
            let (su, sf) = chunk.iter().fold((0.0, 0.0), |(su, sf), s| (su + s[k].0, sf + s[k].1));
            points.push(CurvePoint {
                degree: (d as u32 + 1) * 10,
                u: su / repetitions as f64,
                f: sf / repetitions as f64,
            });
        }
        curves.push(BaselineCurve::new(pair, points)?);
    }
    Ok(curves)
}

pub fn build_baseline(
    original: &PredictionBundle,
    pair: MetricPair,
    repetitions: usize,
    seed: u64,
) -> Result<BaselineCurve, BenchError> {
    Ok(build_baselines(original, &[pair], repetitions, seed)?.remove(0))
}
