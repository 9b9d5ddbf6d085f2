//! Subcommand bodies. Each writes its artifacts, prints what it wrote with
//! SHA-256 digests, and maps failures onto exit codes.

use std::path::{Path, PathBuf};

use nlglrt::classifier::{
    balanced_accuracy, mlp_train, predict_columns, sample_distances, LabeledSampleSet, StopReason,
};
use nlglrt::evaluation::{hex_digest, run_experiment, Mode};
use nlglrt::io::{
    digest_files, read_model, training_log_to_csv, write_file, write_model, write_report, write_scene, ModelFile,
};
use nlglrt::signal::synthesize_scene;

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_MISSING_ARTIFACT};

pub const MODEL_FILE: &str = "model.json";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";

fn print_digests(paths: &[PathBuf]) -> Result<(), CliError> {
    for p in paths {
        let bytes = std::fs::read(p).map_err(|e| CliError::new(crate::error::EXIT_IO, format!("{}: {e}", p.display())))?;
        println!("sha256 {}  {}", hex_digest(&bytes), p.display());
    }
    let refs: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
    println!("sha256 {}  (all outputs)", digest_files(&refs)?);
    Ok(())
}

/// Writes the scene for the configured seed.
pub fn generate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let scene = synthesize_scene(&cfg.scene)?;
    let files = write_scene(out, &scene)?;
    println!(
        "scene: {} antennas x {} samples, seed {}, onset {}",
        cfg.scene.num_antennas, cfg.scene.num_samples, cfg.scene.seed, cfg.scene.onset
    );
    print_digests(&files.all().map(Path::to_path_buf))
}

/// Trains the classifier on the dedicated training scene and writes the
/// model plus its loss log. Returns the model path.
pub fn train(cfg: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let seed = cfg.classifier.train_seed;
    if cfg.evaluation.seeds.contains(&seed) || cfg.evaluation.seeds.contains(&(seed + 1)) {
        eprintln!("warning: training seed {seed} (or its held-out successor) is also an evaluation seed");
    }
    let scene = synthesize_scene(&cfg.scene.with_seed(seed))?;
    let data = LabeledSampleSet::from_pair(&scene.z_linear, &scene.z_nonlinear, cfg.classifier.flagged_fraction)?;
    let trained = mlp_train(&data, &cfg.train)?;

    let held_out = synthesize_scene(&cfg.scene.with_seed(seed + 1))?;
    let truth = LabeledSampleSet::with_threshold(
        &held_out.z_nonlinear,
        sample_distances(&held_out.z_linear, &held_out.z_nonlinear)?,
        data.threshold,
    )?;
    let bacc = balanced_accuracy(&predict_columns(&held_out.z_nonlinear, &trained.model)?, &truth.labels);

    let model_path = out.join(MODEL_FILE);
    let log_path = out.join(TRAINING_LOG_FILE);
    write_model(
        &model_path,
        &ModelFile {
            model: trained.model.clone(),
            train_config: Some(cfg.train.clone()),
            flagged_fraction: Some(cfg.classifier.flagged_fraction),
            distance_threshold: Some(data.threshold),
        },
    )?;
    write_file(&log_path, training_log_to_csv(&trained.history).as_bytes())?;

    let h = &trained.history;
    let stop = match h.stop {
        StopReason::EarlyStop => "early stop",
        StopReason::MaxEpochs => "max epochs",
    };
    let shape: Vec<String> = trained.model.shape_chain().iter().map(|n| n.to_string()).collect();
    println!(
        "model {}: {} epochs ({stop}), best loss {:.5} at epoch {}",
        shape.join("->"),
        h.epochs.len(),
        h.epochs.get(h.best_epoch.saturating_sub(1)).map_or(f64::NAN, |e| e.loss),
        h.best_epoch
    );
    println!(
        "d_T {:.6} flags {}/{} training samples; held-out balanced accuracy {:.3} (seed {})",
        data.threshold,
        data.flagged_count(),
        data.len(),
        bacc,
        seed + 1
    );
    print_digests(&[model_path.clone(), log_path])?;
    Ok(model_path)
}

/// Runs the requested modes over the seeds and writes the report.
pub fn evaluate(cfg: &RunConfig, modes: &[Mode], model_path: &Path, out: &Path) -> Result<(), CliError> {
    let model = if modes.iter().any(|m| m.uses_classifier()) {
        if !model_path.exists() {
            return Err(CliError::new(
                EXIT_MISSING_ARTIFACT,
                format!("model file {} not found (run `nlglrt train` first)", model_path.display()),
            ));
        }
        let file = read_model(model_path).map_err(|e| CliError::new(EXIT_MISSING_ARTIFACT, e.to_string()))?;
        let want = 2 * cfg.scene.num_antennas;
        if file.model.input_width() != want {
            return Err(CliError::new(
                EXIT_MISSING_ARTIFACT,
                format!(
                    "{}: model takes {} inputs but the scene stacks to {want}",
                    model_path.display(),
                    file.model.input_width()
                ),
            ));
        }
        Some(file.model)
    } else {
        None
    };

    let report = run_experiment(
        &cfg.scene,
        model.as_ref(),
        modes,
        &cfg.evaluation.seeds,
        &cfg.pipeline_options(),
    )?;
    let files = write_report(out, &report)?;
    println!(
        "{} seeds, config digest {}",
        report.seeds.len(),
        report.config_digest
    );
    for m in &report.modes {
        let kept: usize = m.trials.iter().map(|t| t.kept_samples).sum();
        println!(
            "{:<14} AUC {:.4}  peak hit rate {:.2}  mean kept samples {:.0}",
            m.mode.as_str(),
            m.roc.auc,
            m.peak_hit_rate,
            kept as f64 / m.trials.len() as f64
        );
    }
    let summary = out.join("summary.json");
    println!("sha256 {}  {}", hex_digest(&std::fs::read(&summary).unwrap_or_default()), summary.display());
    let refs: Vec<&Path> = files.iter().map(|p| p.as_path()).collect();
    println!("sha256 {}  ({} report files)", digest_files(&refs)?, files.len());
    Ok(())
}
