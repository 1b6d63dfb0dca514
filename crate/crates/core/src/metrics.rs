//! Subgroup rates, group fairness metrics and utility metrics.
//!
//! Group 0 of the sensitive attribute is unprivileged, group 1 privileged.
//! Rate differences are computed from the integer cell counts with a single
//! rounding, so algebraic identities such as `FNR + TPR = 1` carry over to the
//! floating-point deltas exactly.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("input has only one sensitive group")]
    DegenerateGroup,
    #[error("{metric} is undefined: {reason}")]
    Undefined { metric: &'static str, reason: String },
    #[error("prediction bundle: {0}")]
    Shape(String),
}

/// Labels, predictions, scores and group membership of one evaluated model.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBundle {
    labels: Vec<bool>,
    predicted: Vec<bool>,
    scores: Vec<f64>,
    sensitive: Vec<bool>,
}

impl PredictionBundle {
    pub fn new(
        labels: Vec<bool>,
        predicted: Vec<bool>,
        scores: Vec<f64>,
        sensitive: Vec<bool>,
    ) -> Result<Self, MetricError> {
        let n = labels.len();
        if n == 0 {
            return Err(MetricError::Shape("empty bundle".into()));
        }
        if predicted.len() != n || scores.len() != n || sensitive.len() != n {
            return Err(MetricError::Shape(format!(
                "length mismatch: labels {n}, predicted {}, scores {}, sensitive {}",
                predicted.len(),
                scores.len(),
                sensitive.len()
            )));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(MetricError::Shape("NaN score".into()));
        }
        Ok(Self { labels, predicted, scores, sensitive })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn predicted(&self) -> &[bool] {
        &self.predicted
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn sensitive(&self) -> &[bool] {
        &self.sensitive
    }

    /// Same labels and groups with different predictions and scores.
    pub fn with_predictions(&self, predicted: Vec<bool>, scores: Vec<f64>) -> Result<Self, MetricError> {
        Self::new(self.labels.clone(), predicted, scores, self.sensitive.clone())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }

    fn record(&mut self, label: bool, predicted: bool) {
        match (label, predicted) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `n1/d1 - n2/d2` with one rounding step. Both denominators must be nonzero.
fn ratio_diff(n1: u64, d1: u64, n2: u64, d2: u64) -> f64 {
    let num = n1 as i128 * d2 as i128 - n2 as i128 * d1 as i128;
    let den = d1 as i128 * d2 as i128;
    num as f64 / den as f64
}

/// Per-group confusion counts with the derived rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupRates {
    pub unprivileged: ConfusionCounts,
    pub privileged: ConfusionCounts,
}

macro_rules! group_rate {
    ($name:ident, $group:ident, $num:ident, $den:ident) => {
        pub fn $name(&self) -> Option<f64> {
            ratio(self.$group.$num, self.$group.$den())
        }
    };
}

impl GroupRates {
    pub fn from_counts(unprivileged: ConfusionCounts, privileged: ConfusionCounts) -> Result<Self, MetricError> {
        if unprivileged.total() == 0 || privileged.total() == 0 {
            return Err(MetricError::DegenerateGroup);
        }
        Ok(Self { unprivileged, privileged })
    }

    group_rate!(tpr_u, unprivileged, tp, positives);
    group_rate!(fnr_u, unprivileged, fn_, positives);
    group_rate!(fpr_u, unprivileged, fp, negatives);
    group_rate!(tpr_p, privileged, tp, positives);
    group_rate!(fnr_p, privileged, fn_, positives);
    group_rate!(fpr_p, privileged, fp, negatives);

    /// `P[Ŷ=1 | Z=0]`
    pub fn sel_u(&self) -> f64 {
        let g = &self.unprivileged;
        g.predicted_positive() as f64 / g.total() as f64
    }

    /// `P[Ŷ=1 | Z=1]`
    pub fn sel_p(&self) -> f64 {
        let g = &self.privileged;
        g.predicted_positive() as f64 / g.total() as f64
    }

    fn require_positives(&self, metric: &'static str) -> Result<(), MetricError> {
        for (name, g) in [("unprivileged", &self.unprivileged), ("privileged", &self.privileged)] {
            if g.positives() == 0 {
                return Err(MetricError::Undefined {
                    metric,
                    reason: format!("{name} group has no favorable labels"),
                });
            }
        }
        Ok(())
    }

    fn require_negatives(&self, metric: &'static str) -> Result<(), MetricError> {
        for (name, g) in [("unprivileged", &self.unprivileged), ("privileged", &self.privileged)] {
            if g.negatives() == 0 {
                return Err(MetricError::Undefined {
                    metric,
                    reason: format!("{name} group has no unfavorable labels"),
                });
            }
        }
        Ok(())
    }

    /// `FPR_u − FPR_p`
    fn delta_fpr(&self, metric: &'static str) -> Result<f64, MetricError> {
        self.require_negatives(metric)?;
        let (u, p) = (&self.unprivileged, &self.privileged);
        Ok(ratio_diff(u.fp, u.negatives(), p.fp, p.negatives()))
    }

    /// `FNR_u − FNR_p`
    fn delta_fnr(&self, metric: &'static str) -> Result<f64, MetricError> {
        self.require_positives(metric)?;
        let (u, p) = (&self.unprivileged, &self.privileged);
        Ok(ratio_diff(u.fn_, u.positives(), p.fn_, p.positives()))
    }

    /// `TPR_u − TPR_p`
    fn delta_tpr(&self, metric: &'static str) -> Result<f64, MetricError> {
        self.require_positives(metric)?;
        let (u, p) = (&self.unprivileged, &self.privileged);
        Ok(ratio_diff(u.tp, u.positives(), p.tp, p.positives()))
    }
}

pub fn group_rates(bundle: &PredictionBundle) -> Result<GroupRates, MetricError> {
    let mut groups = [ConfusionCounts::default(); 2];
    for ((&y, &yhat), &z) in bundle.labels.iter().zip(&bundle.predicted).zip(&bundle.sensitive) {
        groups[usize::from(z)].record(y, yhat);
    }
    GroupRates::from_counts(groups[0], groups[1])
}

/// The three rate differences between groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDeltas {
    /// `FPR_u − FPR_p`
    pub a: f64,
    /// `FNR_u − FNR_p`
    pub b: f64,
    /// `TPR_u − TPR_p`; always `−b`
    pub c: f64,
}

pub fn rate_deltas(rates: &GroupRates) -> Result<RateDeltas, MetricError> {
    Ok(RateDeltas {
        a: rates.delta_fpr("rate deltas")?,
        b: rates.delta_fnr("rate deltas")?,
        c: rates.delta_tpr("rate deltas")?,
    })
}

/// Disparate impact: the smaller of the two selection-rate ratios.
///
/// Both selection rates zero gives 1; exactly one zero gives 0.
pub fn di(rates: &GroupRates) -> f64 {
    let (u, p) = (&rates.unprivileged, &rates.privileged);
    // sel_u / sel_p = (pp_u * n_p) / (pp_p * n_u)
    let lhs = u.predicted_positive() as u128 * p.total() as u128;
    let rhs = p.predicted_positive() as u128 * u.total() as u128;
    match (lhs, rhs) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => lhs.min(rhs) as f64 / lhs.max(rhs) as f64,
    }
}

/// Statistical parity difference `|sel_u − sel_p|`.
pub fn spd(rates: &GroupRates) -> f64 {
    let (u, p) = (&rates.unprivileged, &rates.privileged);
    ratio_diff(u.predicted_positive(), u.total(), p.predicted_positive(), p.total()).abs()
}

/// Equal opportunity difference `TPR_u − TPR_p`.
pub fn eod(rates: &GroupRates) -> Result<f64, MetricError> {
    rates.delta_tpr("EOD")
}

/// Average odds difference `½[(FPR_u − FPR_p) + (TPR_u − TPR_p)]`.
pub fn aod(rates: &GroupRates) -> Result<f64, MetricError> {
    Ok(0.5 * (rates.delta_fpr("AOD")? + rates.delta_tpr("AOD")?))
}

/// Error rate difference `(FPR_u + FNR_u) − (FPR_p + FNR_p)`.
pub fn erd(rates: &GroupRates) -> Result<f64, MetricError> {
    Ok(rates.delta_fpr("ERD")? + rates.delta_fnr("ERD")?)
}

/// `1 − |FPR_u − FPR_p|`; depends on false positive rates only.
pub fn m_a(rates: &GroupRates) -> Result<f64, MetricError> {
    Ok(1.0 - rates.delta_fpr("Ma")?.abs())
}

/// `1 − |FNR_u − FNR_p|`; depends on false negative rates only.
pub fn m_b(rates: &GroupRates) -> Result<f64, MetricError> {
    Ok(1.0 - rates.delta_fnr("Mb")?.abs())
}

pub fn accuracy(bundle: &PredictionBundle) -> f64 {
    let correct = bundle
        .labels
        .iter()
        .zip(&bundle.predicted)
        .filter(|(y, yhat)| y == yhat)
        .count();
    correct as f64 / bundle.len() as f64
}

/// F1 of the favorable class; 0 when precision + recall is 0.
pub fn f1(bundle: &PredictionBundle) -> f64 {
    let mut counts = ConfusionCounts::default();
    for (&y, &yhat) in bundle.labels.iter().zip(&bundle.predicted) {
        counts.record(y, yhat);
    }
    if counts.tp == 0 {
        return 0.0;
    }
    let tp2 = 2 * counts.tp;
    tp2 as f64 / (tp2 + counts.fp + counts.fn_) as f64
}

/// Rank-statistic ROC AUC with half credit for tied scores.
///
/// Scores are sorted once and tied runs receive their average rank; twice the
/// rank sum is kept as an integer so the result is the pairwise count divided
/// by `P·N` exactly.
pub fn auc(bundle: &PredictionBundle) -> Result<f64, MetricError> {
    let positives = bundle.labels.iter().filter(|&&y| y).count() as u64;
    let negatives = bundle.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::Undefined {
            metric: "AUC",
            reason: "labels contain a single class".into(),
        });
    }
    let mut order: Vec<usize> = (0..bundle.len()).collect();
    order.sort_by(|&i, &j| bundle.scores[i].total_cmp(&bundle.scores[j]));

    // sum over positives of (rank_lo + rank_hi) for their tie run, ranks 1-based
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && bundle.scores[order[end]] == bundle.scores[order[start]] {
            end += 1;
        }
        let run_ranks = (start + 1 + end) as u128;
        let run_positives = order[start..end].iter().filter(|&&i| bundle.labels[i]).count() as u128;
        doubled_rank_sum += run_ranks * run_positives;
        start = end;
    }
    let p = positives as u128;
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * positives as u128 * negatives as u128) as f64)
}
