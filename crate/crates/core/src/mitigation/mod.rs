//! Policy-gradient parameter mutation.
//!
//! Each episode starts from the trained parameters θ⁰. At every step the policy
//! picks a ±1 direction per parameter, θ moves by `lr · c(t)` along it, and the
//! reward is measured on a fresh tuning batch. Every visited model is offered
//! to the frontier, scored on the full tuning split. After each episode the
//! policy is updated with REINFORCE against a per-step moving-average baseline.

mod frontier;
mod policy;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frontier::{dominates, hull_indices, Frontier, FrontierPoint, COLLINEAR_EPS};
pub use policy::{PolicyNet, POLICY_DIMS, PROB_CLAMP};

use crate::classifier::{ModelError, ParamClassifier};
use crate::data::{subsample_tuning_batch, DataError, TaskDataset};
use crate::measurement::{Measurement, MeasurementConfig, MeasurementError};
use crate::metrics::MetricError;
use crate::seeding::{derive, substream, Stream};

/// Distinct tuning batches tried per step before the episode is abandoned.
pub const BATCH_RETRIES: u64 = 8;

#[derive(Debug, Error)]
pub enum MitigationError {
    #[error("invalid mitigation settings: {0}")]
    Settings(String),
    #[error("policy update diverged after episode {episode}")]
    Divergence { episode: usize },
    #[error("base model cannot be scored on the tuning split: {0}")]
    BaseEvaluation(MeasurementError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationSettings {
    /// Base step size.
    pub lr: f64,
    /// Decay `d` in `c(t) = 1 / (1 + d·t)`.
    pub scaling: f64,
    pub max_steps: usize,
    /// Episode stops once Ū drops below this fraction of Ū(θ⁰).
    pub utility_floor: f64,
    pub episodes: usize,
    pub policy_lr: f64,
    pub discount: f64,
    pub baseline_momentum: f64,
    /// `None` means `min(256, |tune|)`.
    pub tuning_batch: Option<usize>,
    pub seed: u64,
}

impl Default for MitigationSettings {
    fn default() -> Self {
        Self {
            lr: 0.01,
            scaling: 0.05,
            max_steps: 25,
            utility_floor: 0.9,
            episodes: 40,
            policy_lr: 1e-3,
            discount: 0.99,
            baseline_momentum: 0.9,
            tuning_batch: None,
            seed: 0,
        }
    }
}

impl MitigationSettings {
    pub fn validate(&self) -> Result<(), MitigationError> {
        let bad = |msg: String| Err(MitigationError::Settings(msg));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        if !(self.scaling.is_finite() && self.scaling >= 0.0) {
            return bad(format!("scaling must be >= 0, got {}", self.scaling));
        }
        if !(0.0..=1.0).contains(&self.utility_floor) {
            return bad(format!("utility_floor must be in [0, 1], got {}", self.utility_floor));
        }
        if !(self.policy_lr.is_finite() && self.policy_lr >= 0.0) {
            return bad(format!("policy_lr must be >= 0, got {}", self.policy_lr));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad(format!("discount must be in (0, 1], got {}", self.discount));
        }
        if !(0.0..1.0).contains(&self.baseline_momentum) {
            return bad(format!("baseline_momentum must be in [0, 1), got {}", self.baseline_momentum));
        }
        if self.tuning_batch == Some(0) {
            return bad("tuning_batch must be >= 1".into());
        }
        Ok(())
    }

    pub fn batch_size(&self, tune_len: usize) -> usize {
        self.tuning_batch.unwrap_or(256).min(tune_len)
    }
}

/// `c(t) = 1 / (1 + d·t)`.
pub fn step_scale(t: usize, decay: f64) -> f64 {
    1.0 / (1.0 + decay * t as f64)
}

/// `θ + A · lr · c(t)`.
pub fn apply_update(theta: &[f64], action: &[i8], lr: f64, t: usize, decay: f64) -> Vec<f64> {
    assert_eq!(theta.len(), action.len(), "action length");
    let step = lr * step_scale(t, decay);
    theta.iter().zip(action).map(|(&x, &a)| x + f64::from(a) * step).collect()
}

/// One transition: the state θᵗ, the sampled direction, and what it earned.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStep {
    pub theta: Vec<f64>,
    pub action: Vec<i8>,
    /// Reward of θᵗ⁺¹ on this step's tuning batch.
    pub reward: f64,
    pub log_prob: f64,
    /// Scores of θᵗ⁺¹ on the full tuning split.
    pub f_bar: f64,
    pub u_bar: f64,
}

/// `Gᵗ = Σ_{k≥t} γ^{k−t} rᵏ`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut returns = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, &r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        returns[t] = acc;
    }
    returns
}

/// Exponential moving average of the return at each step index, kept across
/// episodes. A step index seen for the first time has no baseline yet and
/// contributes zero advantage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Baseline {
    values: Vec<Option<f64>>,
    momentum: f64,
}

impl Baseline {
    pub fn new(momentum: f64) -> Self {
        Self { values: Vec::new(), momentum }
    }

    /// A baseline already holding `values` for the first steps.
    pub fn with_values(momentum: f64, values: &[f64]) -> Self {
        Self { values: values.iter().map(|&v| Some(v)).collect(), momentum }
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        self.values.get(t).copied().flatten()
    }

    /// Advantages of `returns` against the current baseline, then folds them in.
    pub fn advantages(&mut self, returns: &[f64]) -> Vec<f64> {
        if self.values.len() < returns.len() {
            self.values.resize(returns.len(), None);
        }
        returns
            .iter()
            .zip(self.values.iter_mut())
            .map(|(&g, slot)| match slot {
                Some(b) => {
                    let adv = g - *b;
                    *b = self.momentum * *b + (1.0 - self.momentum) * g;
                    adv
                }
                None => {
                    *slot = Some(g);
                    0.0
                }
            })
            .collect()
    }
}

/// `Σₜ advₜ · log π(Aᵗ | θᵗ)` under policy parameters `phi`.
pub fn surrogate(policy: &PolicyNet, phi: &[f64], episode: &[EpisodeStep], advantages: &[f64]) -> f64 {
    episode
        .iter()
        .zip(advantages)
        .map(|(step, &adv)| adv * policy.log_prob_at(phi, &step.theta, &step.action))
        .sum()
}

pub fn surrogate_gradient(policy: &PolicyNet, episode: &[EpisodeStep], advantages: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; policy.param_count()];
    for (step, &adv) in episode.iter().zip(advantages) {
        if adv == 0.0 {
            continue;
        }
        for (g, d) in grad.iter_mut().zip(policy.grad_log_prob(&step.theta, &step.action)) {
            *g += adv * d;
        }
    }
    grad
}

/// One REINFORCE ascent step on the surrogate.
pub fn reinforce_update(
    policy: &PolicyNet,
    episode: &[EpisodeStep],
    gamma: f64,
    baseline: &mut Baseline,
    policy_lr: f64,
    episode_index: usize,
) -> Result<PolicyNet, MitigationError> {
    if episode.is_empty() {
        return Ok(policy.clone());
    }
    let rewards: Vec<f64> = episode.iter().map(|s| s.reward).collect();
    let advantages = baseline.advantages(&discounted_returns(&rewards, gamma));
    let grad = surrogate_gradient(policy, episode, &advantages);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(MitigationError::Divergence { episode: episode_index });
    }
    let phi: Vec<f64> = policy.phi().iter().zip(&grad).map(|(p, g)| p + policy_lr * g).collect();
    Ok(policy.with_phi(phi))
}

/// Scores `clf` on the given rows.
pub fn measure(
    clf: &ParamClassifier,
    dataset: &TaskDataset,
    rows: &[usize],
    measurement: &MeasurementConfig,
) -> Result<Measurement, MeasurementError> {
    let bundle = clf
        .bundle(
            &dataset.select_features(rows),
            dataset.select_labels(rows),
            dataset.select_sensitive(rows),
        )
        .map_err(|e| MeasurementError::Config(e.to_string()))?;
    measurement.evaluate(&bundle)
}

/// Reward on a tuning batch, trying fresh batches when a metric is undefined on one.
fn batch_reward(
    clf: &ParamClassifier,
    dataset: &TaskDataset,
    measurement: &MeasurementConfig,
    batch_size: usize,
    seed: u64,
) -> Result<f64, MitigationError> {
    let mut last = None;
    for attempt in 0..BATCH_RETRIES {
        let batch = match subsample_tuning_batch(dataset, batch_size, derive(seed, attempt)) {
            Ok(b) => b,
            Err(e) => {
                last = Some(e.to_string());
                continue;
            }
        };
        match measure(clf, dataset, &batch, measurement) {
            Ok(m) => return Ok(m.reward),
            Err(MeasurementError::Metric(e @ (MetricError::Undefined { .. } | MetricError::DegenerateGroup))) => {
                last = Some(e.to_string());
                // the full split is the only batch there is
                if batch_size == dataset.tune_idx.len() {
                    break;
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(DataError::DegenerateBatch(last.unwrap_or_default()).into())
}

/// Fixed inputs of one mitigation run.
pub struct EpisodeContext<'a> {
    pub base: &'a ParamClassifier,
    pub base_measurement: &'a Measurement,
    pub dataset: &'a TaskDataset,
    pub measurement: &'a MeasurementConfig,
    pub settings: &'a MitigationSettings,
}

/// Runs one episode from θ⁰ and offers every visited model to `frontier`.
pub fn run_episode(
    ctx: &EpisodeContext<'_>,
    policy: &PolicyNet,
    episode: usize,
    frontier: &mut Frontier,
) -> Result<Vec<EpisodeStep>, MitigationError> {
    let settings = ctx.settings;
    let episode_seed = derive(settings.seed, episode as u64);
    let mut action_rng: ChaCha8Rng = substream(episode_seed, Stream::Actions);
    let batch_seed = derive(episode_seed, Stream::Batches as u64);
    let batch_size = settings.batch_size(ctx.dataset.tune_idx.len());
    let floor = settings.utility_floor * ctx.base_measurement.u_bar;

    let mut theta = ctx.base.flatten();
    let mut steps = Vec::with_capacity(settings.max_steps);
    for t in 0..settings.max_steps {
        let (action, log_prob) = policy.sample_action(&theta, &mut action_rng);
        let next = apply_update(&theta, &action, settings.lr, t, settings.scaling);
        let clf = ctx.base.with_theta(next.clone())?;

        let step_seed = derive(batch_seed, t as u64);
        let reward = match batch_reward(&clf, ctx.dataset, ctx.measurement, batch_size, step_seed) {
            Ok(r) => r,
            Err(MitigationError::Data(e)) => {
                log::warn!("episode {episode} stopped at step {t}: {e}");
                break;
            }
            Err(e) => return Err(e),
        };
        let full = match measure(&clf, ctx.dataset, &ctx.dataset.tune_idx, ctx.measurement) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("episode {episode} stopped at step {t}: tuning split unscorable: {e}");
                break;
            }
        };
        frontier.offer(FrontierPoint {
            theta: next.clone(),
            f_bar: full.f_bar,
            u_bar: full.u_bar,
            origin: Some((episode, t)),
        });
        steps.push(EpisodeStep {
            theta: std::mem::replace(&mut theta, next),
            action,
            reward,
            log_prob,
            f_bar: full.f_bar,
            u_bar: full.u_bar,
        });
        if full.u_bar < floor {
            break;
        }
    }
    Ok(steps)
}

/// One logged step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub episode: usize,
    pub t: usize,
    pub reward: f64,
    pub f_bar: f64,
    pub u_bar: f64,
}

#[derive(Debug, Clone)]
pub struct MitigationRun {
    pub frontier: Frontier,
    /// θ⁰ scored on the full tuning split.
    pub base: Measurement,
    pub base_theta: Vec<f64>,
    pub episode_rewards: Vec<Vec<f64>>,
    pub log: Vec<StepRecord>,
    pub policy: PolicyNet,
}

impl MitigationRun {
    /// Reported models: the upper-right hull of the frontier.
    pub fn hull(&self) -> Vec<&FrontierPoint> {
        self.frontier.upper_right_hull()
    }
}

pub fn mitigate(
    base: &ParamClassifier,
    dataset: &TaskDataset,
    measurement: &MeasurementConfig,
    settings: &MitigationSettings,
) -> Result<MitigationRun, MitigationError> {
    settings.validate()?;
    measurement.validate()?;
    if dataset.tune_idx.is_empty() {
        return Err(DataError::DegenerateSplit("empty tuning split".into()).into());
    }
    let base_measurement =
        measure(base, dataset, &dataset.tune_idx, measurement).map_err(MitigationError::BaseEvaluation)?;
    let mut frontier = Frontier::new();
    frontier.offer(FrontierPoint {
        theta: base.flatten(),
        f_bar: base_measurement.f_bar,
        u_bar: base_measurement.u_bar,
        origin: None,
    });

    let ctx = EpisodeContext { base, base_measurement: &base_measurement, dataset, measurement, settings };
    let mut policy = PolicyNet::init(settings.seed);
    let mut baseline = Baseline::new(settings.baseline_momentum);
    let mut episode_rewards = Vec::with_capacity(settings.episodes);
    let mut log = Vec::new();
    for episode in 0..settings.episodes {
        let steps = run_episode(&ctx, &policy, episode, &mut frontier)?;
        log.extend(steps.iter().enumerate().map(|(t, s)| StepRecord {
            episode,
            t,
            reward: s.reward,
            f_bar: s.f_bar,
            u_bar: s.u_bar,
        }));
        episode_rewards.push(steps.iter().map(|s| s.reward).collect());
        policy = reinforce_update(&policy, &steps, settings.discount, &mut baseline, settings.policy_lr, episode)?;
    }
    log::info!(
        "mitigation finished: {} episodes, {} frontier models, {} on hull",
        settings.episodes,
        frontier.len(),
        frontier.upper_right_hull().len()
    );
    Ok(MitigationRun {
        frontier,
        base: base_measurement,
        base_theta: base.flatten(),
        episode_rewards,
        log,
        policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        assert_eq!(apply_update(&[0.5], &[1], 0.01, 0, 0.0), vec![0.51]);
        let out = apply_update(&[1.0, 1.0], &[-1, 1], 0.1, 0, 0.05);
        assert_eq!(out, vec![0.9, 1.1]);
        assert_eq!(step_scale(3, 1.0), 0.25);
        assert!((0.1 * step_scale(3, 1.0) - 0.025).abs() < 1e-18);
        assert_eq!(step_scale(7, 0.0), 1.0);
    }

    #[test]
    fn returns_are_discounted_suffix_sums() {
        assert_eq!(discounted_returns(&[0.7], 0.3), vec![0.7]);
        let g = discounted_returns(&[1.0, 0.0, 2.0], 0.5);
        assert_eq!(g, vec![1.5, 1.0, 2.0]);
    }

    #[test]
    fn baseline_initializes_lazily() {
        let mut b = Baseline::new(0.9);
        assert_eq!(b.advantages(&[0.5, 0.4]), vec![0.0, 0.0]);
        assert_eq!(b.get(0), Some(0.5));
        let adv = b.advantages(&[0.7, 0.4, 0.1]);
        assert!((adv[0] - 0.2).abs() < 1e-15);
        assert_eq!(adv[1], 0.0);
        assert_eq!(adv[2], 0.0);
        assert!((b.get(0).unwrap() - 0.52).abs() < 1e-15);
    }

    fn toy_episode(rewards: &[f64]) -> Vec<EpisodeStep> {
        rewards
            .iter()
            .enumerate()
            .map(|(t, &r)| EpisodeStep {
                theta: vec![0.1 * t as f64, -0.3, 0.8],
                action: vec![1, -1, if t % 2 == 0 { 1 } else { -1 }],
                reward: r,
                log_prob: 0.0,
                f_bar: 0.5,
                u_bar: 0.5,
            })
            .collect()
    }

    #[test]
    fn zero_rewards_against_zero_baseline_leave_policy() {
        let policy = PolicyNet::init(1);
        let mut baseline = Baseline::with_values(0.9, &[0.0, 0.0, 0.0]);
        let updated = reinforce_update(&policy, &toy_episode(&[0.0, 0.0, 0.0]), 0.99, &mut baseline, 0.1, 0).unwrap();
        assert_eq!(updated, policy);
    }

    #[test]
    fn positive_advantage_raises_taken_actions() {
        let policy = PolicyNet::init(2);
        let episode = toy_episode(&[1.0]);
        let mut baseline = Baseline::with_values(0.9, &[0.0]);
        let updated = reinforce_update(&policy, &episode, 0.99, &mut baseline, 0.01, 0).unwrap();
        let before = policy.log_prob(&episode[0].theta, &episode[0].action);
        let after = updated.log_prob(&episode[0].theta, &episode[0].action);
        assert!(after > before);
    }

    #[test]
    fn settings_defaults_validate() {
        let s = MitigationSettings::default();
        s.validate().unwrap();
        assert_eq!(s.batch_size(1000), 256);
        assert_eq!(s.batch_size(100), 100);
        assert!(MitigationSettings { discount: 0.0, ..s.clone() }.validate().is_err());
        assert!(MitigationSettings { baseline_momentum: 1.0, ..s }.validate().is_err());
    }
}
