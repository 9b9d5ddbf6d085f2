//! Sweeps the nonlinearity drive and reports classifier accuracy, AUC per
//! mode and peak hit rates.
//!
//!     cargo run --release -p nlglrt-core --example calibrate -- [setup a|b] [alpha ...]

use nlglrt::classifier::{balanced_accuracy, mlp_train, predict_columns, LabeledSampleSet, Optimizer, TrainConfig};
use nlglrt::evaluation::{run_experiment, Mode, PipelineOptions};
use nlglrt::signal::{synthesize_scene, SceneConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let base = match args.first().map(String::as_str) {
        Some("b") => SceneConfig::setup_b(),
        _ => SceneConfig::default(),
    };
    let alphas: Vec<f64> = args.iter().skip(1).filter_map(|a| a.parse().ok()).collect();
    let alphas = if alphas.is_empty() { vec![base.alpha] } else { alphas };
    let optimizer = match std::env::var("OPT").as_deref() {
        Ok("sgd") => Optimizer::Sgd,
        _ => Optimizer::Adam,
    };
    let fraction: f64 = std::env::var("FRAC").ok().and_then(|v| v.parse().ok()).unwrap_or(0.5);
    let seeds: Vec<u64> = (1..=20).collect();
    let train_seed: u64 = std::env::var("TRAIN_SEED").ok().and_then(|v| v.parse().ok()).unwrap_or(9001);

    for alpha in alphas {
        let nu: f64 = std::env::var("NU").ok().and_then(|v| v.parse().ok()).unwrap_or(base.carrier_cycles_per_sample);
        let cfg = SceneConfig { alpha, carrier_cycles_per_sample: nu, ..base.clone() };
        let train_scene = synthesize_scene(&cfg.with_seed(train_seed)).unwrap();
        let data = LabeledSampleSet::from_pair(&train_scene.z_linear, &train_scene.z_nonlinear, fraction).unwrap();
        let tc = TrainConfig { optimizer, ..TrainConfig::default() };
        let trained = mlp_train(&data, &tc).unwrap();

        let held = synthesize_scene(&cfg.with_seed(train_seed + 1)).unwrap();
        let held_set = LabeledSampleSet::with_threshold(
            &held.z_nonlinear,
            nlglrt::classifier::sample_distances(&held.z_linear, &held.z_nonlinear).unwrap(),
            data.threshold,
        )
        .unwrap();
        let pred = predict_columns(&held.z_nonlinear, &trained.model).unwrap();
        let bacc = balanced_accuracy(&pred, &held_set.labels);

        let report = run_experiment(&cfg, Some(&trained.model), &Mode::ALL, &seeds, &PipelineOptions::default());
        match report {
            Ok(r) => {
                let line: Vec<String> = r
                    .modes
                    .iter()
                    .map(|m| {
                        let kept: usize = m.trials.iter().map(|t| t.kept_samples).sum::<usize>() / m.trials.len();
                        format!("{}: auc {:.3} hit {:.2} kept {}", m.mode, m.roc.auc, m.peak_hit_rate, kept)
                    })
                    .collect();
                println!(
                    "alpha {alpha}: epochs {} loss {:.4} bacc {bacc:.3} | {}",
                    trained.history.epochs.len(),
                    trained.history.epochs.last().unwrap().best_loss,
                    line.join(" | ")
                );
            }
            Err(e) => println!("alpha {alpha}: bacc {bacc:.3} error {e}"),
        }
    }
}
