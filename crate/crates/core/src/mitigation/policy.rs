//! Elementwise meta-optimizer policy.
//!
//! One small network is shared across all classifier parameters. For parameter
//! `i` of `n` it reads `(θᵢ, i/n)` and outputs the probability of moving that
//! parameter up (+1) rather than down (−1).

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::classifier::{sigmoid, DenseStack};
use crate::seeding::{substream, Stream};

pub const POLICY_DIMS: [usize; 4] = [2, 16, 16, 1];
pub const PROB_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    stack: DenseStack,
    phi: Vec<f64>,
}

impl PolicyNet {
    pub fn init(seed: u64) -> Self {
        let stack = DenseStack::new(POLICY_DIMS.to_vec());
        let phi = stack.init_params(&mut substream(seed, Stream::PolicyInit));
        Self { stack, phi }
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn param_count(&self) -> usize {
        self.phi.len()
    }

    pub fn with_phi(&self, phi: Vec<f64>) -> Self {
        assert_eq!(phi.len(), self.phi.len(), "policy parameter count");
        Self { stack: self.stack.clone(), phi }
    }

    /// A policy whose output ignores its input: zero weights, output bias `logit`.
    pub fn constant(logit: f64) -> Self {
        let stack = DenseStack::new(POLICY_DIMS.to_vec());
        let mut phi = vec![0.0; stack.param_count()];
        *phi.last_mut().unwrap() = logit;
        Self { stack, phi }
    }

    fn inputs(theta: &[f64]) -> Array2<f64> {
        let n = theta.len() as f64;
        Array2::from_shape_fn((theta.len(), 2), |(i, j)| if j == 0 { theta[i] } else { i as f64 / n })
    }

    fn logits(&self, phi: &[f64], theta: &[f64]) -> Array1<f64> {
        self.stack.logits(phi, &Self::inputs(theta))
    }

    /// `P(aᵢ = +1)` for every parameter, clamped to `[1e-6, 1 − 1e-6]`.
    pub fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        self.logits(&self.phi, theta).iter().map(|&z| clamp_prob(sigmoid(z))).collect()
    }

    /// Draws one ±1 direction per parameter and returns it with its log-probability.
    pub fn sample_action<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> (Vec<i8>, f64) {
        let probs = self.probabilities(theta);
        let action: Vec<i8> = probs.iter().map(|&p| if rng.random::<f64>() < p { 1 } else { -1 }).collect();
        let log_prob = log_prob_of(&probs, &action);
        (action, log_prob)
    }

    pub fn log_prob(&self, theta: &[f64], action: &[i8]) -> f64 {
        log_prob_of(&self.probabilities(theta), action)
    }

    /// Log-probability under arbitrary policy parameters, for finite differences.
    pub fn log_prob_at(&self, phi: &[f64], theta: &[f64], action: &[i8]) -> f64 {
        let probs: Vec<f64> = self.logits(phi, theta).iter().map(|&z| clamp_prob(sigmoid(z))).collect();
        log_prob_of(&probs, action)
    }

    /// `∇_φ log π(action | θ)`. Clamped coordinates contribute nothing.
    pub fn grad_log_prob(&self, theta: &[f64], action: &[i8]) -> Vec<f64> {
        let pass = self.stack.forward(&self.phi, &Self::inputs(theta));
        let d_logits: Array1<f64> = pass
            .logits
            .iter()
            .zip(action)
            .map(|(&z, &a)| {
                let p = sigmoid(z);
                if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
                    0.0
                } else if a > 0 {
                    1.0 - p
                } else {
                    -p
                }
            })
            .collect();
        self.stack.backward(&self.phi, &pass, &d_logits)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn log_prob_of(probs: &[f64], action: &[i8]) -> f64 {
    debug_assert_eq!(probs.len(), action.len());
    probs
        .iter()
        .zip(action)
        .map(|(&p, &a)| if a > 0 { p.ln() } else { (1.0 - p).ln() })
        .sum()
}
