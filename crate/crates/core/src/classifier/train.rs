use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{mlp_gradient, DenseLayer, MlpModel, Normalization};
use super::LabeledSampleSet;
use crate::error::{Error, Result};

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain minibatch gradient descent.
    Sgd,
    /// Adam with β₁ = 0.9, β₂ = 0.999, ε = 1e-7.
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a strict improvement of the training loss before
    /// stopping.
    pub patience: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            hidden_units: 10,
            batch_size: 64,
            learning_rate: 0.001,
            max_epochs: 500,
            patience: 25,
            optimizer: Optimizer::Adam,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.hidden_units == 0 {
            return fail("hidden_units must be > 0".into());
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return fail("batch_size, max_epochs and patience must be > 0".into());
        }
        if self.patience > self.max_epochs {
            return fail(format!(
                "patience <= max_epochs violated ({} > {})",
                self.patience, self.max_epochs
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be >= 0 (got {})", self.learning_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub stop: StopReason,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub history: TrainingHistory,
}

struct AdamState {
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
    step: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-7;

fn zeros_like(model: &MlpModel) -> Vec<DenseLayer> {
    model
        .layers
        .iter()
        .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
        .collect()
}

fn param_pairs<'a>(
    layer: &'a mut DenseLayer,
    grad: &'a DenseLayer,
) -> impl Iterator<Item = (&'a mut f64, f64)> + 'a {
    layer
        .weights
        .iter_mut()
        .zip(grad.weights.iter().copied())
        .chain(layer.biases.iter_mut().zip(grad.biases.iter().copied()))
}

/// Mean per-sample loss over the whole set.
fn dataset_loss(model: &MlpModel, inputs: &[Vec<f64>], targets: &[[f64; 2]]) -> f64 {
    let total: f64 = inputs
        .iter()
        .zip(targets)
        .map(|(x, y)| {
            let p = model.forward_normalized(x);
            0.5 * ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2))
        })
        .sum();
    total / inputs.len() as f64
}

/// Minibatch training on the MSE between softmax output and one-hot label.
///
/// Features are standardized with statistics from `data`, which are stored
/// in the returned model. The parameters with the lowest end-of-epoch
/// training loss are returned.
pub fn mlp_train(data: &LabeledSampleSet, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.len() < cfg.batch_size {
        return Err(Error::EmptyInput("training set smaller than one batch"));
    }
    let width = data.samples[0].0.len();
    let normalization = Normalization::fit(&data.samples);
    let inputs: Vec<Vec<f64>> = data.samples.iter().map(|s| normalization.apply(&s.0)).collect();
    let targets: Vec<[f64; 2]> = data.labels.iter().map(|l| l.one_hot()).collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);

    let mut model = MlpModel::new(width, cfg.hidden_layers, cfg.hidden_units, &mut init_rng);
    model.normalization = normalization;

    let mut adam = AdamState {
        m: zeros_like(&model),
        v: zeros_like(&model),
        step: 0,
    };

    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs = Vec::new();
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], [f64; 2])> =
                chunk.iter().map(|&i| (inputs[i].as_slice(), targets[i])).collect();
            let grads = mlp_gradient(&model, &batch)?;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (layer, g) in model.layers.iter_mut().zip(&grads.layers) {
                        for (p, d) in param_pairs(layer, g) {
                            *p -= cfg.learning_rate * d;
                        }
                    }
                }
                Optimizer::Adam => {
                    adam.step += 1;
                    let bc1 = 1.0 - ADAM_BETA1.powi(adam.step);
                    let bc2 = 1.0 - ADAM_BETA2.powi(adam.step);
                    for (li, g) in grads.layers.iter().enumerate() {
                        let DenseLayer { weights: mw, biases: mb, .. } = &mut adam.m[li];
                        let ms = mw.iter_mut().chain(mb.iter_mut());
                        let DenseLayer { weights: vw, biases: vb, .. } = &mut adam.v[li];
                        let vs = vw.iter_mut().chain(vb.iter_mut());
                        let ps = param_pairs(&mut model.layers[li], g);
                        for (((p, d), m), v) in ps.zip(ms).zip(vs) {
                            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * d;
                            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * d * d;
                            let m_hat = *m / bc1;
                            let v_hat = *v / bc2;
                            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
                        }
                    }
                }
            }
        }

        let loss = dataset_loss(&model, &inputs, &targets);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if loss < best_loss {
            best_loss = loss;
            best = model.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
        }
        epochs.push(EpochRecord {
            epoch,
            loss,
            best_loss,
        });
        if stale >= cfg.patience {
            stop = StopReason::EarlyStop;
            break;
        }
    }

    Ok(TrainedModel {
        model: best,
        history: TrainingHistory {
            epochs,
            stop,
            best_epoch,
        },
    })
}
