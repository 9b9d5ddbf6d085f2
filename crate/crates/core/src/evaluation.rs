//! Monte-Carlo evaluation: contrast traces per processing mode, ROC curves
//! pooled over seeds, and peak-localization hit rates.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

use crate::classifier::{classify_and_edit, MlpModel};
use crate::detector::{sliding_trace, DetectionTrace};
use crate::error::{Error, Result};
use crate::numerics::HpdInverseOptions;
use crate::signal::{synthesize_scene, SceneConfig};

/// Ground truth for one evaluation position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexLabel {
    Positive,
    Negative,
}

/// Positive iff the test window overlaps `[onset − guard, onset + guard]`
/// or starts right after it (reference window holding the first post-onset
/// sample). On an unedited stream, where positions are reported at the
/// newest test-window sample, this is `original_time ∈ [onset − guard,
/// onset + k + guard]`.
pub fn label_indices(
    trace: &DetectionTrace,
    onset: usize,
    k: usize,
    guard: usize,
) -> Result<Vec<IndexLabel>> {
    let (Some(&first), Some(&last)) = (trace.window_start_time.first(), trace.original_time.last()) else {
        return Err(Error::EmptyInput("trace"));
    };
    if onset < first || onset > last {
        return Err(Error::OnsetOutOfRange { onset, first, last });
    }
    debug_assert!(k >= 1);
    let lo = onset.saturating_sub(guard);
    let hi = onset + 1 + guard;
    Ok(trace
        .window_start_time
        .iter()
        .zip(&trace.original_time)
        .map(|(&start, &end)| {
            if start <= hi && end >= lo {
                IndexLabel::Positive
            } else {
                IndexLabel::Negative
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Threshold producing this point (`stat ≥ gamma` flags).
    pub gamma: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps the threshold over every distinct statistic value of the pooled
/// traces, from `+∞` (nothing flagged) down to the minimum (everything
/// flagged). AUC by the trapezoid rule.
pub fn roc_from_traces(traces: &[(&DetectionTrace, &[IndexLabel])]) -> Result<RocCurve> {
    let mut scored: Vec<(f64, bool)> = Vec::new();
    for (trace, labels) in traces {
        if trace.stat.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} statistics with {} labels",
                trace.stat.len(),
                labels.len()
            )));
        }
        scored.extend(
            trace
                .stat
                .iter()
                .zip(labels.iter())
                .map(|(&s, &l)| (s, l == IndexLabel::Positive)),
        );
    }
    roc_from_scores(&scored)
}

/// ROC of `(score, is_positive)` pairs.
pub fn roc_from_scores(scored: &[(f64, bool)]) -> Result<RocCurve> {
    let positives = scored.iter().filter(|s| s.1).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels { positives, negatives });
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        gamma: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let gamma = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == gamma {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            gamma,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Which matrix feeds the detector, and whether it is edited first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Linear,
    Nonlinear,
    NonlinearDnn,
    LinearDnn,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Linear, Mode::Nonlinear, Mode::NonlinearDnn, Mode::LinearDnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::Nonlinear => "nonlinear",
            Mode::NonlinearDnn => "nonlinear_dnn",
            Mode::LinearDnn => "linear_dnn",
        }
    }

    pub fn uses_classifier(self) -> bool {
        matches!(self, Mode::NonlinearDnn | Mode::LinearDnn)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "linear" => Ok(Mode::Linear),
            "nonlinear" | "nonlinear_raw" => Ok(Mode::Nonlinear),
            "nonlinear_dnn" => Ok(Mode::NonlinearDnn),
            "linear_dnn" => Ok(Mode::LinearDnn),
            other => Err(format!(
                "unknown mode '{other}' (expected linear, nonlinear, nonlinear_dnn, linear_dnn)"
            )),
        }
    }
}

/// Knobs shared by every trial of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub loading: HpdInverseOptions,
    pub guard: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            loading: HpdInverseOptions::relative(1e-9),
            guard: 0,
        }
    }
}

/// One seed through one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub trace: DetectionTrace,
    pub labels: Vec<IndexLabel>,
    pub peak_original_time: usize,
    pub kept_samples: usize,
}

impl TrialResult {
    /// Whether the test window at the peak straddles the onset, i.e. the
    /// peak position would be labelled positive without a guard band. On an
    /// unedited stream this is `peak_original_time ∈ [onset, onset + k]`.
    pub fn peak_hit(&self, onset: usize) -> bool {
        self.trace.argmax().is_some_and(|i| {
            self.trace.window_start_time[i] <= onset + 1 && self.trace.original_time[i] >= onset
        })
    }
}

/// All trials of one mode plus the pooled ROC.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: Mode,
    pub trials: Vec<TrialResult>,
    pub roc: RocCurve,
    pub peak_hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: SceneConfig,
    pub options: PipelineOptions,
    pub seeds: Vec<u64>,
    pub config_digest: String,
    pub modes: Vec<ModeReport>,
}

impl ExperimentReport {
    pub fn mode(&self, mode: Mode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn auc(&self, mode: Mode) -> Option<f64> {
        self.mode(mode).map(|m| m.roc.auc)
    }
}

/// SHA-256 over the canonical JSON of the scene config (seed excluded) and
/// pipeline options.
pub fn config_digest(config: &SceneConfig, options: &PipelineOptions) -> String {
    let family = config.with_seed(0);
    let doc = serde_json::json!({ "scene": family, "options": options });
    hex_digest(doc.to_string().as_bytes())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Synthesizes the scene for `seed` and runs one mode on it.
pub fn run_trial(
    config: &SceneConfig,
    model: Option<&MlpModel>,
    mode: Mode,
    seed: u64,
    options: &PipelineOptions,
) -> Result<TrialResult> {
    let scene = synthesize_scene(&config.with_seed(seed))?;
    let k = config.window_k;
    let source = match mode {
        Mode::Linear | Mode::LinearDnn => &scene.z_linear,
        Mode::Nonlinear | Mode::NonlinearDnn => &scene.z_nonlinear,
    };

    let (trace, kept_samples) = if mode.uses_classifier() {
        let model = model.ok_or(Error::MissingModel(mode.as_str()))?;
        let edit = classify_and_edit(source, model)?;
        let needed = 2 * k;
        if edit.kept_indices.len() < needed {
            return Err(Error::InsufficientSamples {
                seed,
                kept: edit.kept_indices.len(),
                needed,
            });
        }
        let trace =
            sliding_trace(&edit.edited, k, &options.loading)?.with_kept_indices(&edit.kept_indices);
        (trace, edit.kept_indices.len())
    } else {
        (sliding_trace(source, k, &options.loading)?, source.cols())
    };

    let labels = label_indices(&trace, config.onset, k, options.guard)?;
    let peak_original_time = trace.peak_original_time().ok_or(Error::EmptyInput("trace"))?;
    Ok(TrialResult {
        seed,
        trace,
        labels,
        peak_original_time,
        kept_samples,
    })
}

/// Runs one mode over all seeds and pools the ROC.
pub fn run_pipeline(
    config: &SceneConfig,
    model: Option<&MlpModel>,
    mode: Mode,
    seeds: &[u64],
    options: &PipelineOptions,
) -> Result<ModeReport> {
    config.validate()?;
    if mode.uses_classifier() && model.is_none() {
        return Err(Error::MissingModel(mode.as_str()));
    }
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seeds"));
    }
    let run = |&seed: &u64| run_trial(config, model, mode, seed, options);

    // results are kept in seed order whether or not trials run in parallel,
    // so the reported error is always that of the first failing seed
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<TrialResult>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<TrialResult>> = seeds.iter().map(run).collect();
    let trials = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let pooled: Vec<(&DetectionTrace, &[IndexLabel])> =
        trials.iter().map(|t| (&t.trace, t.labels.as_slice())).collect();
    let roc = roc_from_traces(&pooled)?;
    let hits = trials
        .iter()
        .filter(|t| t.peak_hit(config.onset))
        .count();
    Ok(ModeReport {
        mode,
        peak_hit_rate: hits as f64 / trials.len() as f64,
        trials,
        roc,
    })
}

/// Runs every requested mode on the same seeds.
pub fn run_experiment(
    config: &SceneConfig,
    model: Option<&MlpModel>,
    modes: &[Mode],
    seeds: &[u64],
    options: &PipelineOptions,
) -> Result<ExperimentReport> {
    let modes = modes
        .iter()
        .map(|&mode| run_pipeline(config, model, mode, seeds, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: config.clone(),
        options: *options,
        seeds: seeds.to_vec(),
        config_digest: config_digest(config, options),
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_from(stat: Vec<f64>, original_time: Vec<usize>, k: usize) -> DetectionTrace {
        DetectionTrace {
            index_map: original_time.clone(),
            window_start_time: original_time.iter().map(|t| t + 1 - k).collect(),
            stat,
            original_time,
            window_k: k,
        }
    }

    #[test]
    fn labels_without_guard() {
        let t = trace_from(vec![0.0; 1905], (95..95 + 1905).collect(), 48);
        let labels = label_indices(&t, 1000, 48, 0).unwrap();
        for (i, l) in labels.iter().enumerate() {
            let time = t.original_time[i];
            let expected = (1000..=1048).contains(&time);
            assert_eq!(*l == IndexLabel::Positive, expected, "time {time}");
        }
        assert_eq!(labels.iter().filter(|&&l| l == IndexLabel::Positive).count(), 49);
    }

    #[test]
    fn onset_at_last_index_and_out_of_range() {
        let t = trace_from(vec![0.0; 5], vec![10, 11, 12, 13, 14], 1);
        let labels = label_indices(&t, 14, 1, 0).unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == IndexLabel::Positive).count(), 1);
        assert_eq!(
            label_indices(&t, 20, 1, 0),
            Err(Error::OnsetOutOfRange { onset: 20, first: 10, last: 14 })
        );
    }

    #[test]
    fn perfect_separation_and_minimal_case() {
        let t = trace_from(vec![1.0, 2.0], vec![0, 1], 1);
        let labels = [IndexLabel::Negative, IndexLabel::Positive];
        let roc = roc_from_traces(&[(&t, &labels)]).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert!(roc.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(roc.points.first().map(|p| (p.fpr, p.tpr)), Some((0.0, 0.0)));
        assert_eq!(roc.points.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));
    }

    #[test]
    fn ties_make_diagonal_segments() {
        let roc = roc_from_scores(&[(1.0, true), (1.0, false)]).unwrap();
        assert_eq!(roc.points.len(), 2);
        assert_eq!(roc.auc, 0.5);
    }

    #[test]
    fn degenerate_labels() {
        assert_eq!(
            roc_from_scores(&[(1.0, true), (2.0, true)]),
            Err(Error::DegenerateLabels { positives: 2, negatives: 0 })
        );
    }

    #[test]
    fn mode_parsing() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert_eq!("nonlinear_raw".parse::<Mode>().unwrap(), Mode::Nonlinear);
        assert!("dnn".parse::<Mode>().is_err());
    }

    #[test]
    fn classifier_modes_need_a_model() {
        let cfg = SceneConfig::default();
        assert_eq!(
            run_pipeline(&cfg, None, Mode::NonlinearDnn, &[1], &PipelineOptions::default()),
            Err(Error::MissingModel("nonlinear_dnn"))
        );
    }
}
