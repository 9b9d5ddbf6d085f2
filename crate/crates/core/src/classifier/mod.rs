//! Nonlinear-sample classifier front end.
//!
//! Training pairs each compressed snapshot `f(z(t))` with a one-hot label
//! derived from its distortion `d_t = ‖z(t) − f(z(t))‖₂`: samples whose
//! distortion exceeds a threshold `d_T` are "excessively nonlinear". A small
//! dense network learns that label from `f(z(t))` alone, and at test time the
//! flagged columns are deleted before running the detector.

mod mlp;
mod train;

pub use mlp::{mlp_forward, mlp_gradient, DenseLayer, Gradients, MlpModel, Normalization};
pub use train::{
    mlp_train, EpochRecord, Optimizer, StopReason, TrainConfig, TrainedModel, TrainingHistory,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SnapshotMatrix;

/// Snapshot as a real vector: `[Re z₁ … Re z_M, Im z₁ … Im z_M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedSample(pub Vec<f64>);

impl StackedSample {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn num_antennas(&self) -> usize {
        self.0.len() / 2
    }
}

pub fn stack_sample(column: &[Complex64]) -> StackedSample {
    let mut v = Vec::with_capacity(2 * column.len());
    v.extend(column.iter().map(|z| z.re));
    v.extend(column.iter().map(|z| z.im));
    StackedSample(v)
}

pub fn unstack_sample(sample: &StackedSample) -> Vec<Complex64> {
    let m = sample.num_antennas();
    (0..m)
        .map(|i| Complex64::new(sample.0[i], sample.0[m + i]))
        .collect()
}

/// Stacks every column of a snapshot matrix.
pub fn stack_columns(z: &SnapshotMatrix) -> Vec<StackedSample> {
    (0..z.cols()).map(|t| stack_sample(&z.column(t))).collect()
}

/// Per-column Euclidean distance between the linear and compressed matrices.
pub fn sample_distances(z_linear: &SnapshotMatrix, z_nonlinear: &SnapshotMatrix) -> Result<Vec<f64>> {
    if (z_linear.rows(), z_linear.cols()) != (z_nonlinear.rows(), z_nonlinear.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "linear {}x{} vs nonlinear {}x{}",
            z_linear.rows(),
            z_linear.cols(),
            z_nonlinear.rows(),
            z_nonlinear.cols()
        )));
    }
    Ok((0..z_linear.cols())
        .map(|t| {
            (0..z_linear.rows())
                .map(|i| (z_linear[(i, t)] - z_nonlinear[(i, t)]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Nearest-rank `(1 − flagged_fraction)` quantile of the distances.
pub fn choose_threshold(distances: &[f64], flagged_fraction: f64) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::EmptyInput("distances"));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let q = (1.0 - flagged_fraction).clamp(0.0, 1.0);
    // the small offset absorbs rounding in q·n (0.7·100 = 70.00000000000001)
    let rank = ((q * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Two-class label: near-linear or excessively nonlinear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Linear,
    Nonlinear,
}

impl Label {
    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Label::Linear => [1.0, 0.0],
            Label::Nonlinear => [0.0, 1.0],
        }
    }

    /// Decision on a softmax pair: nonlinear iff `ŷ₁ < ŷ₂`.
    pub fn from_prediction(p: [f64; 2]) -> Self {
        if p[0] < p[1] {
            Label::Nonlinear
        } else {
            Label::Linear
        }
    }
}

/// Linear iff `d ≤ d_T`.
pub fn make_labels(distances: &[f64], threshold: f64) -> Vec<Label> {
    distances
        .iter()
        .map(|&d| if d <= threshold { Label::Linear } else { Label::Nonlinear })
        .collect()
}

/// Training set drawn from a paired linear/compressed scene.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSampleSet {
    pub samples: Vec<StackedSample>,
    pub labels: Vec<Label>,
    pub distances: Vec<f64>,
    pub threshold: f64,
}

impl LabeledSampleSet {
    /// Labels every column of `z_nonlinear` against its linear counterpart,
    /// with `d_T` chosen to flag about `flagged_fraction` of the columns.
    pub fn from_pair(
        z_linear: &SnapshotMatrix,
        z_nonlinear: &SnapshotMatrix,
        flagged_fraction: f64,
    ) -> Result<Self> {
        let distances = sample_distances(z_linear, z_nonlinear)?;
        let threshold = choose_threshold(&distances, flagged_fraction)?;
        Self::with_threshold(z_nonlinear, distances, threshold)
    }

    pub fn with_threshold(z_nonlinear: &SnapshotMatrix, distances: Vec<f64>, threshold: f64) -> Result<Self> {
        if distances.len() != z_nonlinear.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} distances for {} samples",
                distances.len(),
                z_nonlinear.cols()
            )));
        }
        Ok(Self {
            samples: stack_columns(z_nonlinear),
            labels: make_labels(&distances, threshold),
            distances,
            threshold,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn flagged_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Nonlinear).count()
    }
}

/// Compressed stream with flagged columns removed.
#[derive(Debug, Clone, PartialEq)]
pub struct EditResult {
    pub edited: SnapshotMatrix,
    pub kept_indices: Vec<usize>,
    pub flagged_count: usize,
}

/// Runs every column through the classifier and drops those predicted
/// nonlinear.
pub fn classify_and_edit(z: &SnapshotMatrix, model: &MlpModel) -> Result<EditResult> {
    if model.input_width() != 2 * z.rows() {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} inputs, snapshots stack to {}",
            model.input_width(),
            2 * z.rows()
        )));
    }
    let labels = predict_columns(z, model)?;
    let kept_indices: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == Label::Linear)
        .map(|(t, _)| t)
        .collect();
    Ok(EditResult {
        edited: z.select_columns(&kept_indices),
        flagged_count: z.cols() - kept_indices.len(),
        kept_indices,
    })
}

/// Predicted label per column.
pub fn predict_columns(z: &SnapshotMatrix, model: &MlpModel) -> Result<Vec<Label>> {
    let classify = |t: usize| -> Result<Label> {
        let p = mlp_forward(model, &stack_sample(&z.column(t)))?;
        Ok(Label::from_prediction(p))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..z.cols()).into_par_iter().map(classify).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..z.cols()).map(classify).collect()
    }
}

/// Mean of per-class recalls of `predicted` against `truth`.
pub fn balanced_accuracy(predicted: &[Label], truth: &[Label]) -> f64 {
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&p, &t) in predicted.iter().zip(truth) {
        let c = (t == Label::Nonlinear) as usize;
        totals[c] += 1;
        if p == t {
            hits[c] += 1;
        }
    }
    let recalls: Vec<f64> = (0..2)
        .filter(|&c| totals[c] > 0)
        .map(|c| hits[c] as f64 / totals[c] as f64)
        .collect();
    if recalls.is_empty() {
        return 0.0;
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}
