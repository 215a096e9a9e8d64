//! Dense feed-forward networks: the site classifiers and the pairwise ranker.

mod gradcheck;
mod io;
mod mlp;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gradcheck::{grad_check, grad_check_sampled, min_abs_preactivation, GradTarget};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use mlp::{sigmoid, Gradients, Mlp};
pub use train::{train_classifier, train_classifier_weighted, train_siamese};

/// A trained network is just an `Mlp` carrying its training metadata.
pub type TrainedModel = Mlp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    pub(crate) fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// Hidden widths followed by the output width, which must be 1.
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    /// Drop probability for hidden units during training.
    pub dropout: f64,
    /// Coefficient of `l2 / 2 * |W|^2` added to the loss; biases are not penalized.
    pub l2: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Reweight classes to equal total weight in the classifier loss.
    #[serde(default)]
    pub class_weighting: bool,
    /// Margin of the ranking loss.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    1.0
}

impl MlpConfig {
    /// Source/sink classifier: batch 64, 512-256-128-164-1, ReLU, L2, dropout 0.2.
    pub fn site_classifier(input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            layer_dims: vec![512, 256, 128, 164, 1],
            activation: Activation::Relu,
            dropout: 0.2,
            l2: 1e-5,
            batch_size: 64,
            learning_rate: 1e-3,
            epochs: 10,
            seed: 0,
            class_weighting: true,
            margin: 1.0,
        }
    }

    /// The classifier profile with a fourth hidden layer of 64 units.
    pub fn site_classifier_corrected(input_dim: usize) -> MlpConfig {
        MlpConfig {
            layer_dims: vec![512, 256, 128, 64, 1],
            ..MlpConfig::site_classifier(input_dim)
        }
    }

    /// Pairwise ranker: batch 200, 360-360-1, tanh, dropout 0.5.
    pub fn siamese_ranker(input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            layer_dims: vec![360, 360, 1],
            activation: Activation::Tanh,
            dropout: 0.5,
            l2: 0.0,
            batch_size: 200,
            learning_rate: 1e-3,
            epochs: 10,
            seed: 0,
            class_weighting: false,
            margin: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::Config(m.to_string()));
        if self.input_dim == 0 {
            return bad("input_dim must be at least 1");
        }
        if self.layer_dims.last() != Some(&1) {
            return bad("final layer width must be 1");
        }
        if self.layer_dims.contains(&0) {
            return bad("layer widths must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) {
            return bad("learning_rate must be positive and l2 non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub final_loss: f64,
    pub seed: u64,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("input has dimension {got}, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
