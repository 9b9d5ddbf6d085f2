use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StackedSample;
use crate::error::{Error, Result};

/// Fully connected layer, `weights` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Uniform in `±1/√fan_in`, zero biases.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.random_range(-bound..bound))
                .collect(),
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let dot: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            out.push(dot + self.biases[o]);
        }
    }

    fn is_consistent(&self) -> bool {
        self.weights.len() == self.inputs * self.outputs && self.biases.len() == self.outputs
    }
}

/// Per-feature standardization applied before the first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    /// Mean and population standard deviation per feature; constant
    /// features get unit scale.
    pub fn fit(samples: &[StackedSample]) -> Self {
        let width = samples.first().map_or(0, |s| s.0.len());
        let n = samples.len().max(1) as f64;
        let mut mean = vec![0.0; width];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(&s.0) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for s in samples {
            for ((acc, v), m) in var.iter_mut().zip(&s.0).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Dense classifier: `tanh` hidden layers and a two-way softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub normalization: Normalization,
    /// Hidden layers followed by the output layer.
    pub layers: Vec<DenseLayer>,
}

impl MlpModel {
    /// Random network with `hidden_layers` layers of `units` each.
    pub fn new<R: Rng + ?Sized>(input_width: usize, hidden_layers: usize, units: usize, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = input_width;
        for _ in 0..hidden_layers {
            layers.push(DenseLayer::random(fan_in, units, rng));
            fan_in = units;
        }
        layers.push(DenseLayer::random(fan_in, 2, rng));
        Self {
            normalization: Normalization::identity(input_width),
            layers,
        }
    }

    pub fn from_layers(normalization: Normalization, layers: Vec<DenseLayer>) -> Result<Self> {
        let model = Self { normalization, layers };
        model.validate()?;
        Ok(model)
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    /// Layer widths from input to output, e.g. `[8, 10, 10, 10, 2]`.
    pub fn shape_chain(&self) -> Vec<usize> {
        let mut chain = vec![self.input_width()];
        chain.extend(self.layers.iter().map(|l| l.outputs));
        chain
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let Some(last) = self.layers.last() else {
            return Err(Error::ShapeMismatch("model has no layers".into()));
        };
        if last.outputs != 2 {
            return Err(Error::ShapeMismatch(format!(
                "output layer has {} units, expected 2",
                last.outputs
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if !layer.is_consistent() {
                return Err(Error::ShapeMismatch(format!("layer {i} parameter count")));
            }
            if i > 0 && self.layers[i - 1].outputs != layer.inputs {
                return Err(Error::ShapeMismatch(format!(
                    "layer {} emits {} values, layer {i} takes {}",
                    i - 1,
                    self.layers[i - 1].outputs,
                    layer.inputs
                )));
            }
            let finite = layer.weights.iter().chain(&layer.biases).all(|v| v.is_finite());
            if !finite {
                return Err(Error::ShapeMismatch(format!("layer {i} has non-finite parameters")));
            }
        }
        let w = self.input_width();
        if self.normalization.mean.len() != w || self.normalization.std.len() != w {
            return Err(Error::ShapeMismatch("normalization width".into()));
        }
        Ok(())
    }

    /// Activations of every layer for one normalized input; the last entry is
    /// the softmax output.
    pub(crate) fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(acts.last().unwrap(), &mut z);
            if i == last {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    /// Forward pass on an already normalized input.
    pub fn forward_normalized(&self, x: &[f64]) -> [f64; 2] {
        let out = self.activations(x).pop().unwrap();
        [out[0], out[1]]
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Class probabilities `[ŷ₁, ŷ₂]` for one stacked snapshot.
pub fn mlp_forward(model: &MlpModel, x: &StackedSample) -> Result<[f64; 2]> {
    if x.0.len() != model.input_width() {
        return Err(Error::ShapeMismatch(format!(
            "sample of width {} for a model taking {}",
            x.0.len(),
            model.input_width()
        )));
    }
    Ok(model.forward_normalized(&model.normalization.apply(&x.0)))
}

/// Parameter gradients, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
    /// Batch loss at the current parameters.
    pub loss: f64,
}

/// Exact gradient of the batch loss
/// `(1/B) Σ_b ½ Σ_j (ŷ_bj − y_bj)²` with respect to every weight and bias.
///
/// Inputs are taken as already normalized (normalization is fixed during
/// training and not a trainable parameter).
pub fn mlp_gradient(model: &MlpModel, batch: &[(&[f64], [f64; 2])]) -> Result<Gradients> {
    let mut grads: Vec<DenseLayer> = model
        .layers
        .iter()
        .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
        .collect();
    if batch.is_empty() {
        return Ok(Gradients { layers: grads, loss: 0.0 });
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;

    for (x, y) in batch {
        if x.len() != model.input_width() {
            return Err(Error::ShapeMismatch(format!(
                "batch sample of width {} for a model taking {}",
                x.len(),
                model.input_width()
            )));
        }
        let acts = model.activations(x);
        let out = acts.last().unwrap();
        let resid = [out[0] - y[0], out[1] - y[1]];
        loss += 0.5 * (resid[0] * resid[0] + resid[1] * resid[1]) * scale;

        // softmax Jacobian: dL/dz_i = ŷ_i (g_i − Σ_j g_j ŷ_j)
        let g = [resid[0] * scale, resid[1] * scale];
        let dot = g[0] * out[0] + g[1] * out[1];
        let mut delta: Vec<f64> = (0..2).map(|i| out[i] * (g[i] - dot)).collect();

        for li in (0..model.layers.len()).rev() {
            let layer = &model.layers[li];
            let input = &acts[li];
            let gl = &mut grads[li];
            for o in 0..layer.outputs {
                gl.biases[o] += delta[o];
                let row = &mut gl.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, &a) in row.iter_mut().zip(input) {
                    *w += delta[o] * a;
                }
            }
            if li == 0 {
                break;
            }
            // back through the weights, then through tanh of the previous layer
            let mut prev = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += w * delta[o];
                }
            }
            for (p, &a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }
    Ok(Gradients { layers: grads, loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_indifferent() {
        let model = MlpModel {
            normalization: Normalization::identity(4),
            layers: vec![DenseLayer::zeros(4, 3), DenseLayer::zeros(3, 2)],
        };
        let p = mlp_forward(&model, &StackedSample(vec![1.0, -2.0, 3.0, 0.5])).unwrap();
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn softmax_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = MlpModel::new(8, 3, 10, &mut rng);
        for k in 0..50 {
            let x = StackedSample((0..8).map(|i| ((i * 31 + k * 7) % 13) as f64 - 6.0).collect());
            let p = mlp_forward(&model, &x).unwrap();
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn shape_chain_and_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = MlpModel::new(8, 3, 10, &mut rng);
        assert_eq!(model.shape_chain(), vec![8, 10, 10, 10, 2]);
        assert!(matches!(
            mlp_forward(&model, &StackedSample(vec![0.0; 6])),
            Err(Error::ShapeMismatch(_))
        ));
        let mut broken = model.clone();
        broken.layers[1].inputs = 9;
        assert!(broken.validate().is_err());
    }

    #[test]
    fn zero_residual_has_no_gradient() {
        let model = MlpModel {
            normalization: Normalization::identity(2),
            layers: vec![DenseLayer::zeros(2, 2)],
        };
        let x = [1.0, 2.0];
        let g = mlp_gradient(&model, &[(&x[..], [0.5, 0.5])]).unwrap();
        assert!(g.layers[0].weights.iter().all(|&w| w == 0.0));
        assert_eq!(g.loss, 0.0);
    }

    #[test]
    fn normalization_fit() {
        let s = vec![
            StackedSample(vec![1.0, 5.0]),
            StackedSample(vec![3.0, 5.0]),
        ];
        let n = Normalization::fit(&s);
        assert_eq!(n.mean, vec![2.0, 5.0]);
        assert_eq!(n.std, vec![1.0, 1.0]);
        assert_eq!(n.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
    }
}
