//! Browser bindings for the detector demo.
//!
//! Three operations are exported, each taking and returning JSON so the page
//! needs no generated type glue:
//!
//! * [`transfer_curve`] — the front-end compression curve for a drive `α`;
//! * [`detect`] — linear and compressed detection traces for one scene;
//! * [`detect_with_editor`] — trains the sample classifier on a separate
//!   scene, edits the compressed stream and returns the resulting trace.
//!
//! The `*_value` functions hold the logic and are what the native tests call;
//! the exported wrappers only convert errors into JavaScript exceptions.

use nlglrt::classifier::{
    balanced_accuracy, classify_and_edit, mlp_train, predict_columns, sample_distances, LabeledSampleSet,
    TrainConfig,
};
use nlglrt::detector::{sliding_trace, DetectionTrace};
use nlglrt::numerics::HpdInverseOptions;
use nlglrt::signal::{compress, synthesize_scene, SceneConfig};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Relative diagonal loading used for every covariance inverse.
const LOADING: f64 = 1e-9;

/// Request for [`detect_with_editor`]. Scene fields left out take their
/// setup (a) values.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EditorRequest {
    pub scene: SceneConfig,
    pub train_seed: u64,
    pub flagged_fraction: f64,
}

impl Default for EditorRequest {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            train_seed: 9001,
            flagged_fraction: 0.5,
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T, String> {
    let text = if json.trim().is_empty() { "{}" } else { json };
    serde_json::from_str(text).map_err(|e| format!("bad request: {e}"))
}

fn trace_json(trace: &DetectionTrace) -> Value {
    let peak = trace.argmax().map(|i| trace.original_time[i]);
    json!({
        "time": trace.original_time,
        "stat": trace.stat,
        "peak_time": peak,
    })
}

/// `points` evenly spaced inputs on `[-max_input, max_input]` with their
/// compressed outputs.
pub fn transfer_curve_value(alpha: f64, max_input: f64, points: usize) -> Result<Value, String> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(format!("alpha must be positive (got {alpha})"));
    }
    if !(max_input > 0.0 && max_input.is_finite()) || points < 2 {
        return Err("need max_input > 0 and at least two points".into());
    }
    let input: Vec<f64> = (0..points)
        .map(|i| -max_input + 2.0 * max_input * i as f64 / (points - 1) as f64)
        .collect();
    let output: Vec<f64> = input.iter().map(|&x| compress(x, alpha)).collect();
    Ok(json!({ "alpha": alpha, "saturation": 1.0 / alpha, "input": input, "output": output }))
}

/// Detection traces of the linear and compressed streams of one scene.
pub fn detect_value(scene_json: &str) -> Result<Value, String> {
    let cfg: SceneConfig = parse(scene_json)?;
    let scene = synthesize_scene(&cfg).map_err(|e| e.to_string())?;
    let opts = HpdInverseOptions::relative(LOADING);
    let linear = sliding_trace(&scene.z_linear, cfg.window_k, &opts).map_err(|e| e.to_string())?;
    let nonlinear = sliding_trace(&scene.z_nonlinear, cfg.window_k, &opts).map_err(|e| e.to_string())?;
    Ok(json!({
        "onset": cfg.onset,
        "window_k": cfg.window_k,
        "linear": trace_json(&linear),
        "nonlinear": trace_json(&nonlinear),
    }))
}

/// Trains the classifier on `train_seed`, then edits and scans the
/// compressed stream of the requested scene.
pub fn detect_with_editor_value(request_json: &str) -> Result<Value, String> {
    let req: EditorRequest = parse(request_json)?;
    let cfg = &req.scene;
    cfg.validate().map_err(|e| e.to_string())?;
    if req.train_seed == cfg.seed {
        return Err("train_seed must differ from the scene seed".into());
    }
    let training = synthesize_scene(&cfg.with_seed(req.train_seed)).map_err(|e| e.to_string())?;
    let data = LabeledSampleSet::from_pair(&training.z_linear, &training.z_nonlinear, req.flagged_fraction)
        .map_err(|e| e.to_string())?;
    let trained = mlp_train(&data, &TrainConfig::default()).map_err(|e| e.to_string())?;

    let scene = synthesize_scene(cfg).map_err(|e| e.to_string())?;
    let truth = LabeledSampleSet::with_threshold(
        &scene.z_nonlinear,
        sample_distances(&scene.z_linear, &scene.z_nonlinear).map_err(|e| e.to_string())?,
        data.threshold,
    )
    .map_err(|e| e.to_string())?;
    let predicted = predict_columns(&scene.z_nonlinear, &trained.model).map_err(|e| e.to_string())?;
    let edit = classify_and_edit(&scene.z_nonlinear, &trained.model).map_err(|e| e.to_string())?;
    if edit.kept_indices.len() < 2 * cfg.window_k {
        return Err(format!(
            "only {} samples survive editing, need at least {}",
            edit.kept_indices.len(),
            2 * cfg.window_k
        ));
    }
    let trace = sliding_trace(&edit.edited, cfg.window_k, &HpdInverseOptions::relative(LOADING))
        .map_err(|e| e.to_string())?
        .with_kept_indices(&edit.kept_indices);
    Ok(json!({
        "onset": cfg.onset,
        "window_k": cfg.window_k,
        "edited": trace_json(&trace),
        "kept_samples": edit.kept_indices.len(),
        "total_samples": scene.z_nonlinear.cols(),
        "balanced_accuracy": balanced_accuracy(&predicted, &truth.labels),
        "epochs": trained.history.epochs.len(),
        "distance_threshold": data.threshold,
    }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn transfer_curve(alpha: f64, max_input: f64, points: usize) -> Result<String, JsError> {
    to_js(transfer_curve_value(alpha, max_input, points))
}

#[wasm_bindgen]
pub fn detect(scene_json: &str) -> Result<String, JsError> {
    to_js(detect_value(scene_json))
}

#[wasm_bindgen]
pub fn detect_with_editor(request_json: &str) -> Result<String, JsError> {
    to_js(detect_with_editor_value(request_json))
}
