//! ROC and pipeline behaviour checked against rank-statistic and
//! direct-scan oracles.

use nlglrt::classifier::{DenseLayer, MlpModel, Normalization};
use nlglrt::detector::{sliding_trace, DetectionTrace};
use nlglrt::evaluation::{
    label_indices, roc_from_scores, roc_from_traces, run_experiment, run_pipeline, IndexLabel, Mode,
    PipelineOptions, RocCurve,
};
use nlglrt::io::{digest_files, read_summary, write_report};
use nlglrt::numerics::{ComplexMatrix, HpdInverseOptions};
use nlglrt::signal::SceneConfig;
use nlglrt::{Complex64, Error};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probability that a random positive outranks a random negative, ties
/// counting one half.
fn mann_whitney_auc(scored: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scored.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scored.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn check_curve_invariants(roc: &RocCurve) {
    let first = roc.points.first().unwrap();
    let last = roc.points.last().unwrap();
    assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
    assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    for w in roc.points.windows(2) {
        assert!(w[1].gamma < w[0].gamma, "thresholds must strictly decrease");
        assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
    }
    assert!(roc.points.iter().all(|p| (0.0..=1.0).contains(&p.fpr) && (0.0..=1.0).contains(&p.tpr)));
    assert!((0.0..=1.0).contains(&roc.auc));
}

#[test]
fn auc_equals_rank_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    for _ in 0..20 {
        // coarse scores so that ties are common
        let scored: Vec<(f64, bool)> = (0..300)
            .map(|_| {
                let pos = rng.random::<bool>();
                let s: f64 = (rng.random_range(0.0f64..10.0) + if pos { 2.0 } else { 0.0 }).floor();
                (s, pos)
            })
            .collect();
        let roc = roc_from_scores(&scored).unwrap();
        check_curve_invariants(&roc);
        assert!((roc.auc - mann_whitney_auc(&scored)).abs() < 1e-12);
    }
}

#[test]
fn permutation_null_gives_chance_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let stats: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let mut labels: Vec<IndexLabel> = (0..10_000)
        .map(|i| if i < 5_000 { IndexLabel::Positive } else { IndexLabel::Negative })
        .collect();
    labels.shuffle(&mut rng);
    let trace = DetectionTrace {
        index_map: (0..10_000).collect(),
        original_time: (0..10_000).collect(),
        window_start_time: (0..10_000).collect(),
        stat: stats,
        window_k: 1,
    };
    let roc = roc_from_traces(&[(&trace, &labels)]).unwrap();
    check_curve_invariants(&roc);
    assert!((roc.auc - 0.5).abs() <= 0.03, "null AUC {}", roc.auc);
}

#[test]
fn auc_is_invariant_under_increasing_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    let scored: Vec<(f64, bool)> = (0..500)
        .map(|_| {
            let pos = rng.random::<bool>();
            (rng.random_range(0.1..5.0) + if pos { 0.7 } else { 0.0 }, pos)
        })
        .collect();
    let base = roc_from_scores(&scored).unwrap().auc;
    let transforms: [fn(f64) -> f64; 3] = [|x| x.ln(), |x| x.powi(3) + 7.0, |x| (2.0 * x).exp()];
    for f in transforms {
        let mapped: Vec<(f64, bool)> = scored.iter().map(|&(s, l)| (f(s), l)).collect();
        assert!((roc_from_scores(&mapped).unwrap().auc - base).abs() < 1e-12);
    }
}

#[test]
fn perfectly_separated_scores_have_unit_auc() {
    let scored: Vec<(f64, bool)> = (0..50).map(|i| (i as f64, i >= 30)).collect();
    let roc = roc_from_scores(&scored).unwrap();
    assert_eq!(roc.auc, 1.0);
    assert!(roc.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
}

#[test]
fn edited_stream_labels_follow_kept_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(403);
    let (onset, k) = (300, 8);
    for guard in [0, 3] {
        let kept: Vec<usize> = (0..600).filter(|_| rng.random::<f64>() > 0.3).collect();
        let z = ComplexMatrix::from_fn(2, kept.len(), |_, _| Complex64::new(rng.random(), rng.random()));
        let trace = sliding_trace(&z, k, &HpdInverseOptions::exact())
            .unwrap()
            .with_kept_indices(&kept);
        let labels = label_indices(&trace, onset, k, guard).unwrap();
        for (i, &label) in labels.iter().enumerate() {
            // the test window occupies edited columns i+k .. i+2k
            let cols = &kept[i + k..i + 2 * k];
            let (first, last) = (cols[0], cols[k - 1]);
            assert_eq!(trace.original_time[i], last);
            let overlaps = first <= onset + 1 + guard && last + guard >= onset;
            assert_eq!(label == IndexLabel::Positive, overlaps, "position {i}");
        }
        assert!(labels.contains(&IndexLabel::Positive));
    }
}

fn feature_threshold_model(feature: usize, threshold: f64) -> MlpModel {
    // flag iff x[feature] > threshold
    let mut hidden = DenseLayer::zeros(8, 1);
    hidden.weights[feature] = 1.0;
    hidden.biases[0] = -threshold;
    let mut out = DenseLayer::zeros(1, 2);
    out.weights = vec![-1.0, 1.0];
    MlpModel::from_layers(Normalization::identity(8), vec![hidden, out]).unwrap()
}

fn small_config() -> SceneConfig {
    SceneConfig {
        num_samples: 800,
        onset: 400,
        ..SceneConfig::default()
    }
}

#[test]
fn edited_runs_evaluate_kept_minus_window_positions() {
    let cfg = small_config();
    let model = feature_threshold_model(0, 50.0);
    let report = run_pipeline(&cfg, Some(&model), Mode::LinearDnn, &[1, 2, 3], &PipelineOptions::default()).unwrap();
    for trial in &report.trials {
        assert!(trial.kept_samples < cfg.num_samples);
        assert_eq!(trial.trace.len(), trial.kept_samples - 2 * cfg.window_k + 1);
        assert_eq!(trial.labels.len(), trial.trace.len());
    }
    check_curve_invariants(&report.roc);
}

#[test]
fn keep_everything_model_reproduces_unedited_run() {
    let cfg = small_config();
    let keep_all = feature_threshold_model(0, 1e6);
    let seeds = [4, 5];
    let opts = PipelineOptions::default();
    let plain = run_pipeline(&cfg, None, Mode::Linear, &seeds, &opts).unwrap();
    let edited = run_pipeline(&cfg, Some(&keep_all), Mode::LinearDnn, &seeds, &opts).unwrap();
    for (a, b) in plain.trials.iter().zip(&edited.trials) {
        assert_eq!(a.trace, b.trace);
    }
    assert_eq!(plain.roc, edited.roc);
}

#[test]
fn flag_everything_model_reports_the_seed() {
    let cfg = small_config();
    let flag_all = feature_threshold_model(0, -1e6);
    let err = run_pipeline(&cfg, Some(&flag_all), Mode::NonlinearDnn, &[11, 12], &PipelineOptions::default())
        .unwrap_err();
    assert_eq!(
        err,
        Error::InsufficientSamples {
            seed: 11,
            kept: 0,
            needed: 2 * cfg.window_k
        }
    );
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = small_config();
    let model = feature_threshold_model(4, 10.0);
    let seeds = [7, 8, 9];
    let opts = PipelineOptions::default();
    let mut digests = Vec::new();
    for _ in 0..2 {
        let report = run_experiment(&cfg, Some(&model), &Mode::ALL, &seeds, &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(dir.path(), &report).unwrap();
        assert_eq!(files.len(), 4 * seeds.len() + 4 + 1);
        let summary = read_summary(&dir.path().join("summary.json")).unwrap();
        assert_eq!(summary.modes.len(), 4);
        assert!(summary.roc_pooled_over_seeds);
        let refs: Vec<&std::path::Path> = files.iter().map(|p| p.as_path()).collect();
        digests.push(digest_files(&refs).unwrap());
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn guard_widens_the_positive_band() {
    let cfg = small_config();
    let narrow = run_pipeline(&cfg, None, Mode::Linear, &[1], &PipelineOptions::default()).unwrap();
    let wide = run_pipeline(
        &cfg,
        None,
        Mode::Linear,
        &[1],
        &PipelineOptions {
            guard: 5,
            ..PipelineOptions::default()
        },
    )
    .unwrap();
    let count = |r: &nlglrt::evaluation::ModeReport| {
        r.trials[0].labels.iter().filter(|&&l| l == IndexLabel::Positive).count()
    };
    assert_eq!(count(&narrow), cfg.window_k + 1);
    assert_eq!(count(&wide), cfg.window_k + 1 + 10);
}
