//! Parameterized binary classifiers whose parameters live in one flat vector θ.

mod gradcheck;
mod io;
pub mod network;
mod train;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gradcheck::{
    max_relative_error, numeric_gradient_check, relative_error, sample_coords, FD_STEP, MAX_CHECKED_COORDS,
};
pub use io::{read_model, write_model, MODEL_FORMAT_HEADER};
pub use network::{sigmoid, softplus, DenseStack, ForwardPass};
pub use train::{loss_and_gradient, train_base, train_on_split, TrainReport, TrainSettings};

use crate::metrics::PredictionBundle;

/// Hidden layer widths of the neural network classifier.
pub const NN_HIDDEN: [usize; 5] = [64, 32, 16, 8, 4];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("invalid training settings: {0}")]
    Settings(String),
    #[error("{0} has no differentiable training loss")]
    NotDifferentiable(ModelKind),
    #[error("model format: {0}")]
    Format(String),
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Svm,
    Nn,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Svm => "svm",
            ModelKind::Nn => "nn",
        }
    }

    pub fn dims(&self, feature_dim: usize) -> Vec<usize> {
        match self {
            ModelKind::Lr | ModelKind::Svm => vec![feature_dim, 1],
            ModelKind::Nn => std::iter::once(feature_dim)
                .chain(NN_HIDDEN)
                .chain(std::iter::once(1))
                .collect(),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(ModelKind::Lr),
            "svm" => Ok(ModelKind::Svm),
            "nn" | "mlp" => Ok(ModelKind::Nn),
            other => Err(ModelError::Format(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Weights and bias of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: ndarray::Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamClassifier {
    kind: ModelKind,
    stack: DenseStack,
    theta: Vec<f64>,
}

impl ParamClassifier {
    /// LR and SVM start at θ = 0; the NN gets seeded He-uniform weights.
    pub fn init(kind: ModelKind, feature_dim: usize, seed: u64) -> Result<Self, ModelError> {
        if feature_dim == 0 {
            return Err(ModelError::Shape("feature dimension must be at least 1".into()));
        }
        let stack = DenseStack::new(kind.dims(feature_dim));
        let theta = match kind {
            ModelKind::Lr | ModelKind::Svm => vec![0.0; stack.param_count()],
            ModelKind::Nn => stack.init_params(&mut ChaCha8Rng::seed_from_u64(seed)),
        };
        Ok(Self { kind, stack, theta })
    }

    /// Rebuilds a classifier from its kind, layer widths and flat parameters.
    pub fn unflatten(kind: ModelKind, dims: Vec<usize>, theta: Vec<f64>) -> Result<Self, ModelError> {
        if dims.len() < 2 || dims.contains(&0) || dims.last() != Some(&1) {
            return Err(ModelError::Shape(format!("invalid layer widths {dims:?}")));
        }
        if dims != kind.dims(dims[0]) {
            return Err(ModelError::Shape(format!("widths {dims:?} do not match a {kind} model")));
        }
        let stack = DenseStack::new(dims);
        if theta.len() != stack.param_count() {
            return Err(ModelError::Shape(format!(
                "expected {} parameters, got {}",
                stack.param_count(),
                theta.len()
            )));
        }
        Ok(Self { kind, stack, theta })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.theta.clone()
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        self.stack.dims()
    }

    pub fn stack(&self) -> &DenseStack {
        &self.stack
    }

    pub fn feature_dim(&self) -> usize {
        self.stack.input_dim()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    /// Same architecture with different parameters.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self, ModelError> {
        if theta.len() != self.theta.len() {
            return Err(ModelError::Shape(format!(
                "expected {} parameters, got {}",
                self.theta.len(),
                theta.len()
            )));
        }
        Ok(Self { kind: self.kind, stack: self.stack.clone(), theta })
    }

    pub fn layers(&self) -> Vec<LayerParams> {
        (0..self.stack.layer_count())
            .map(|l| {
                let (w, b): (ArrayView2<f64>, ArrayView1<f64>) = self.stack.layer(&self.theta, l);
                LayerParams { weights: w.to_owned(), bias: b.to_owned() }
            })
            .collect()
    }

    pub fn from_layers(kind: ModelKind, layers: &[LayerParams]) -> Result<Self, ModelError> {
        let mut dims = Vec::with_capacity(layers.len() + 1);
        let mut theta = Vec::new();
        for (l, layer) in layers.iter().enumerate() {
            if l == 0 {
                dims.push(layer.weights.nrows());
            } else if layer.weights.nrows() != dims[l] {
                return Err(ModelError::Shape(format!("layer {l} input width mismatch")));
            }
            if layer.bias.len() != layer.weights.ncols() {
                return Err(ModelError::Shape(format!("layer {l} bias width mismatch")));
            }
            dims.push(layer.weights.ncols());
            theta.extend(layer.weights.iter());
            theta.extend(layer.bias.iter());
        }
        Self::unflatten(kind, dims, theta)
    }

    fn check_width(&self, features: &Array2<f64>) -> Result<(), ModelError> {
        if features.ncols() != self.feature_dim() {
            return Err(ModelError::Shape(format!(
                "model expects {} features, input has {}",
                self.feature_dim(),
                features.ncols()
            )));
        }
        Ok(())
    }

    /// Sigmoid probabilities for LR/NN, raw signed margins for SVM.
    pub fn predict_scores(&self, features: &Array2<f64>) -> Result<Vec<f64>, ModelError> {
        self.check_width(features)?;
        let logits = self.stack.logits(&self.theta, features);
        Ok(match self.kind {
            ModelKind::Svm => logits.to_vec(),
            ModelKind::Lr | ModelKind::Nn => logits.iter().map(|&z| sigmoid(z)).collect(),
        })
    }

    /// Decision threshold of [`Self::predict_scores`]; ties classify as favorable.
    pub fn threshold(&self) -> f64 {
        match self.kind {
            ModelKind::Svm => 0.0,
            ModelKind::Lr | ModelKind::Nn => 0.5,
        }
    }

    pub fn labels_from_scores(&self, scores: &[f64]) -> Vec<bool> {
        let t = self.threshold();
        scores.iter().map(|&s| s >= t).collect()
    }

    pub fn predict_labels(&self, features: &Array2<f64>) -> Result<Vec<bool>, ModelError> {
        Ok(self.labels_from_scores(&self.predict_scores(features)?))
    }

    /// Scores and thresholded labels packed with the true labels and groups.
    pub fn bundle(
        &self,
        features: &Array2<f64>,
        labels: Vec<bool>,
        sensitive: Vec<bool>,
    ) -> Result<PredictionBundle, ModelError> {
        let scores = self.predict_scores(features)?;
        let predicted = self.labels_from_scores(&scores);
        PredictionBundle::new(labels, predicted, scores, sensitive).map_err(|e| ModelError::Shape(e.to_string()))
    }
}
