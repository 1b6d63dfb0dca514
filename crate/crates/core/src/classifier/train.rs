//! Base training: mini-batch gradient descent on cross-entropy (LR, NN) or
//! hinge loss (SVM), with an L2 penalty on weights only.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{sigmoid, softplus};
use super::{ModelError, ModelKind, ParamClassifier};
use crate::data::TaskDataset;
use crate::seeding::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    #[serde(default)]
    pub l2: f64,
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TrainSettings {
    /// Fallback settings when a preset does not override them.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => Self { learning_rate: 0.1, epochs: 200, l2: 1e-4, batch_size: 64, seed: 0 },
            ModelKind::Svm => Self { learning_rate: 0.05, epochs: 200, l2: 1e-3, batch_size: 64, seed: 0 },
            ModelKind::Nn => Self { learning_rate: 0.05, epochs: 100, l2: 0.0, batch_size: 64, seed: 0 },
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Settings(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(ModelError::Settings(format!("l2 must be >= 0, got {}", self.l2)));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Settings("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch training loss evaluated on the full training split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// `losses[0]` is the loss before the first epoch.
    pub losses: Vec<f64>,
    /// Step size below which full-batch descent on the LR loss cannot increase it.
    pub stability_threshold: Option<f64>,
}

/// Mean loss and its gradient over `features`.
///
/// LR and NN use binary cross-entropy on the logit, SVM the hinge loss on the
/// margin with labels mapped to ±1. The penalty `l2/2 · ‖w‖²` skips biases.
pub fn loss_and_gradient(
    clf: &ParamClassifier,
    theta: &[f64],
    features: &Array2<f64>,
    labels: &[bool],
    l2: f64,
) -> Result<(f64, Vec<f64>), ModelError> {
    if features.nrows() != labels.len() || features.nrows() == 0 {
        return Err(ModelError::Shape(format!(
            "{} feature rows vs {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if features.ncols() != clf.feature_dim() || theta.len() != clf.param_count() {
        return Err(ModelError::Shape("features or parameters do not match the model".into()));
    }
    let stack = clf.stack();
    let n = labels.len() as f64;
    let pass = stack.forward(theta, features);
    let mut d_logits = Array1::zeros(labels.len());
    let mut loss = 0.0;
    for (i, (&z, &y)) in pass.logits.iter().zip(labels).enumerate() {
        match clf.kind() {
            ModelKind::Lr | ModelKind::Nn => {
                let t = if y { 1.0 } else { 0.0 };
                loss += softplus(z) - t * z;
                d_logits[i] = (sigmoid(z) - t) / n;
            }
            ModelKind::Svm => {
                let s = if y { 1.0 } else { -1.0 };
                let margin = 1.0 - s * z;
                if margin > 0.0 {
                    loss += margin;
                    d_logits[i] = -s / n;
                }
            }
        }
    }
    loss /= n;
    let mut grad = stack.backward(theta, &pass, &d_logits);
    if l2 > 0.0 {
        for ((g, &t), w) in grad.iter_mut().zip(theta).zip(stack.weight_mask()) {
            if w {
                loss += 0.5 * l2 * t * t;
                *g += l2 * t;
            }
        }
    }
    Ok((loss, grad))
}

/// Trains on the dataset's train split and returns θ⁰.
pub fn train_base(
    clf: &ParamClassifier,
    dataset: &TaskDataset,
    settings: &TrainSettings,
) -> Result<ParamClassifier, ModelError> {
    let features = dataset.select_features(&dataset.train_idx);
    let labels = dataset.select_labels(&dataset.train_idx);
    train_on_split(clf, &features, &labels, settings).map(|(trained, _)| trained)
}

pub fn train_on_split(
    clf: &ParamClassifier,
    features: &Array2<f64>,
    labels: &[bool],
    settings: &TrainSettings,
) -> Result<(ParamClassifier, TrainReport), ModelError> {
    settings.validate()?;
    if labels.is_empty() {
        return Err(ModelError::Shape("empty training split".into()));
    }
    let mut theta = clf.flatten();
    let full_loss = |theta: &[f64]| loss_and_gradient(clf, theta, features, labels, settings.l2).map(|(l, _)| l);

    let stability_threshold = (clf.kind() == ModelKind::Lr).then(|| lr_stability_threshold(features, settings.l2));
    if let Some(limit) = stability_threshold {
        log::debug!("lr stability threshold {limit:.4}, learning_rate {}", settings.learning_rate);
        if settings.learning_rate > limit {
            log::warn!(
                "learning_rate {} exceeds stability threshold {limit:.4}; training loss may oscillate",
                settings.learning_rate
            );
        }
    }

    let mut losses = vec![full_loss(&theta)?];
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut rng = substream(settings.seed, Stream::Train);
    for epoch in 1..=settings.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(settings.batch_size) {
            let x = features.select(Axis(0), chunk);
            let y: Vec<bool> = chunk.iter().map(|&i| labels[i]).collect();
            let (_, grad) = loss_and_gradient(clf, &theta, &x, &y, settings.l2)?;
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= settings.learning_rate * g;
            }
        }
        let loss = full_loss(&theta)?;
        if !loss.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::Divergence { epoch, loss });
        }
        losses.push(loss);
    }
    let trained = clf.with_theta(theta)?;
    Ok((trained, TrainReport { losses, stability_threshold }))
}

/// `1 / L` where `L = ¼·max‖[x, 1]‖² + l2` bounds the curvature of the mean
/// logistic loss.
fn lr_stability_threshold(features: &Array2<f64>, l2: f64) -> f64 {
    let max_sq = features
        .rows()
        .into_iter()
        .map(|r| r.dot(&r) + 1.0)
        .fold(0.0, f64::max);
    1.0 / (0.25 * max_sq + l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_epochs_is_identity() {
        let clf = ParamClassifier::init(ModelKind::Nn, 2, 5).unwrap();
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let settings = TrainSettings { epochs: 0, ..TrainSettings::default_for(ModelKind::Nn) };
        let (trained, report) = train_on_split(&clf, &x, &[true, false], &settings).unwrap();
        assert_eq!(trained, clf);
        assert_eq!(report.losses.len(), 1);
    }

    #[test]
    fn lr_loss_at_zero_is_ln2() {
        let clf = ParamClassifier::init(ModelKind::Lr, 2, 0).unwrap();
        let x = array![[0.3, 0.1], [0.9, 0.4], [0.2, 0.8]];
        let (loss, grad) = loss_and_gradient(&clf, clf.theta(), &x, &[true, false, true], 0.0).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        // d/db = mean(σ(0) - y) = 0.5 - 2/3
        assert!((grad[2] - (0.5 - 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn svm_hinge_at_zero() {
        let clf = ParamClassifier::init(ModelKind::Svm, 1, 0).unwrap();
        let x = array![[1.0], [2.0]];
        let (loss, grad) = loss_and_gradient(&clf, clf.theta(), &x, &[true, false], 0.0).unwrap();
        assert_eq!(loss, 1.0);
        // w: (-1·1 + 1·2)/2, b: (-1 + 1)/2
        assert_eq!(grad, vec![0.5, 0.0]);
    }

    #[test]
    fn l2_skips_bias() {
        let clf = ParamClassifier::init(ModelKind::Svm, 1, 0).unwrap();
        let theta = [0.0, 3.0];
        // margins all satisfied: hinge is zero, bias carries no penalty
        let (loss, grad) = loss_and_gradient(&clf, &theta, &array![[0.0]], &[true], 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grad, vec![0.0, 0.0]);
    }

    #[test]
    fn full_batch_lr_loss_never_increases_below_threshold() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 10.0);
        let y: Vec<bool> = (0..40).map(|i| (i * 5) % 3 != 0).collect();
        let clf = ParamClassifier::init(ModelKind::Lr, 2, 0).unwrap();
        let limit = lr_stability_threshold(&x, 0.01);
        let settings = TrainSettings { learning_rate: limit, epochs: 50, l2: 0.01, batch_size: 40, seed: 1 };
        let (_, report) = train_on_split(&clf, &x, &y, &settings).unwrap();
        assert!(report.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn divergence_is_reported() {
        let x = array![[1e200, 1e200], [-1e200, 1e200]];
        let clf = ParamClassifier::init(ModelKind::Svm, 2, 0).unwrap();
        let settings = TrainSettings { learning_rate: 1e200, epochs: 3, l2: 1.0, batch_size: 2, seed: 0 };
        let err = train_on_split(&clf, &x, &[true, false], &settings).unwrap_err();
        assert!(matches!(err, ModelError::Divergence { epoch: 1, .. }), "{err:?}");
    }

    #[test]
    fn settings_validation() {
        let mut s = TrainSettings::default_for(ModelKind::Lr);
        assert!(s.validate().is_ok());
        s.batch_size = 0;
        assert!(s.validate().is_err());
        s = TrainSettings { learning_rate: 0.0, ..TrainSettings::default_for(ModelKind::Lr) };
        assert!(s.validate().is_err());
    }
}
