//! Central finite-difference checks of analytic gradients.

use ndarray::Array2;
use rand::seq::index::sample;

use super::train::loss_and_gradient;
use super::{ModelError, ModelKind, ParamClassifier};
use crate::seeding::{substream, Stream};

pub const FD_STEP: f64 = 1e-5;
/// Upper bound on the number of coordinates probed per check.
pub const MAX_CHECKED_COORDS: usize = 50;

/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`; zero when both vanish.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Largest relative error between `analytic` and central differences of `f`
/// over the given coordinates.
pub fn max_relative_error<F>(f: F, x: &[f64], analytic: &[f64], coords: &[usize]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    coords
        .iter()
        .map(|&k| {
            probe[k] = x[k] + FD_STEP;
            let plus = f(&probe);
            probe[k] = x[k] - FD_STEP;
            let minus = f(&probe);
            probe[k] = x[k];
            relative_error(analytic[k], (plus - minus) / (2.0 * FD_STEP))
        })
        .fold(0.0, f64::max)
}

/// Up to [`MAX_CHECKED_COORDS`] distinct coordinates out of `n`, sorted.
pub fn sample_coords(n: usize, seed: u64) -> Vec<usize> {
    let mut coords = sample(&mut substream(seed, Stream::ModelInit), n, n.min(MAX_CHECKED_COORDS)).into_vec();
    coords.sort_unstable();
    coords
}

/// Checks the training-loss gradient of `clf` at its current θ on `sample`.
pub fn numeric_gradient_check(
    clf: &ParamClassifier,
    features: &Array2<f64>,
    labels: &[bool],
    l2: f64,
    seed: u64,
) -> Result<f64, ModelError> {
    if clf.kind() == ModelKind::Svm {
        return Err(ModelError::NotDifferentiable(clf.kind()));
    }
    let theta = clf.theta();
    let (_, grad) = loss_and_gradient(clf, theta, features, labels, l2)?;
    let loss = |t: &[f64]| {
        loss_and_gradient(clf, t, features, labels, l2)
            .map(|(l, _)| l)
            .unwrap_or(f64::NAN)
    };
    Ok(max_relative_error(loss, theta, &grad, &sample_coords(theta.len(), seed)))
}
