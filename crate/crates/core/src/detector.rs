//! Sliding-window covariance change detector.
//!
//! Two adjacent, disjoint windows of `k` snapshots slide over the stream one
//! sample at a time. For each position the statistic is
//! `tr(R̂_old⁻¹ R̂_new)` with `R̂ = Z·Zᴴ` over the respective window. A signal
//! arriving from a new direction inflates `R̂_new` in a subspace that
//! `R̂_old⁻¹` does not suppress, which shows up as a contrast peak.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gram, hpd_inverse, ComplexMatrix, HpdInverseOptions, SnapshotMatrix};

/// Reference window and the window under test.
#[derive(Debug, Clone)]
pub struct PartitionPair {
    pub z_old: ComplexMatrix,
    pub z_new: ComplexMatrix,
}

impl PartitionPair {
    pub fn new(z_old: ComplexMatrix, z_new: ComplexMatrix) -> Result<Self> {
        if z_old.rows() != z_new.rows() {
            return Err(Error::DimensionMismatch(format!(
                "partitions have {} and {} rows",
                z_old.rows(),
                z_new.rows()
            )));
        }
        if z_old.cols() < z_old.rows() {
            return Err(Error::DimensionMismatch(format!(
                "reference window has {} columns, needs at least {}",
                z_old.cols(),
                z_old.rows()
            )));
        }
        if z_new.cols() == 0 {
            return Err(Error::EmptyInput("test window"));
        }
        Ok(Self { z_old, z_new })
    }
}

/// Imaginary residue tolerated in the trace, relative to its real part.
const IMAG_TOLERANCE: f64 = 1e-9;

/// `Re tr(R̂_old⁻¹ R̂_new)`.
pub fn glrt_statistic(pair: &PartitionPair, opts: &HpdInverseOptions) -> Result<f64> {
    statistic_from_grams(&gram(&pair.z_old), &gram(&pair.z_new), opts)
}

fn statistic_from_grams(
    r_old: &ComplexMatrix,
    r_new: &ComplexMatrix,
    opts: &HpdInverseOptions,
) -> Result<f64> {
    let inv = hpd_inverse(r_old, opts)?;
    // tr(A·B) = Σ_ij A_ij B_ji without forming the product
    let n = inv.rows();
    let mut tr = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += inv[(i, j)] * r_new[(j, i)];
        }
    }
    debug_assert!(
        tr.im.abs() <= IMAG_TOLERANCE * tr.re.abs().max(1.0),
        "trace of Hermitian product has imaginary part {}",
        tr.im
    );
    Ok(tr.re)
}

/// Statistic per window position.
///
/// Each position is reported at the newest sample of the test window, i.e.
/// the time at which a causal detector could first emit the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrace {
    pub stat: Vec<f64>,
    /// Stream index (edited stream, if samples were deleted) of the last
    /// column of the test window.
    pub index_map: Vec<usize>,
    /// Original time of the last test-window column.
    pub original_time: Vec<usize>,
    /// Original time of the first test-window column.
    pub window_start_time: Vec<usize>,
    pub window_k: usize,
}

impl DetectionTrace {
    pub fn len(&self) -> usize {
        self.stat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stat.is_empty()
    }

    /// Re-expresses positions in original time given the kept-sample table
    /// produced by editing.
    pub fn with_kept_indices(mut self, kept: &[usize]) -> Self {
        self.original_time = self.index_map.iter().map(|&i| kept[i]).collect();
        self.window_start_time = self
            .index_map
            .iter()
            .map(|&i| kept[i + 1 - self.window_k])
            .collect();
        self
    }

    /// Position of the largest statistic (first one on ties).
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.stat.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Original time at which the statistic peaks.
    pub fn peak_original_time(&self) -> Option<usize> {
        self.argmax().map(|i| self.original_time[i])
    }
}

pub fn sliding_trace(z: &SnapshotMatrix, k: usize, opts: &HpdInverseOptions) -> Result<DetectionTrace> {
    let len = z.cols();
    if k == 0 || len < 2 * k {
        return Err(Error::WindowTooLarge { len, window_k: k });
    }
    if k < z.rows() {
        return Err(Error::DimensionMismatch(format!(
            "window of {k} samples cannot estimate a {}x{} covariance",
            z.rows(),
            z.rows()
        )));
    }
    let positions = len - 2 * k + 1;
    let eval = |s: usize| -> Result<f64> {
        let r_old = gram(&z.column_range(s, s + k));
        let r_new = gram(&z.column_range(s + k, s + 2 * k));
        statistic_from_grams(&r_old, &r_new, opts)
    };

    #[cfg(feature = "parallel")]
    let stat: Result<Vec<f64>> = {
        use rayon::prelude::*;
        (0..positions).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let stat: Result<Vec<f64>> = (0..positions).map(eval).collect();

    let index_map: Vec<usize> = (0..positions).map(|s| s + 2 * k - 1).collect();
    Ok(DetectionTrace {
        stat: stat?,
        original_time: index_map.clone(),
        window_start_time: (0..positions).map(|s| s + k).collect(),
        index_map,
        window_k: k,
    })
}

/// `stat[s] ≥ γ` per position.
pub fn threshold_decisions(trace: &DetectionTrace, gamma: f64) -> Vec<bool> {
    trace.stat.iter().map(|&v| v >= gamma).collect()
}
