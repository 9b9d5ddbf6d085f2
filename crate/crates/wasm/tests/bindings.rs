//! Native runs of the demo operations.

use nlglrt::detector::sliding_trace;
use nlglrt::numerics::HpdInverseOptions;
use nlglrt::signal::{synthesize_scene, SceneConfig};
use nlglrt_wasm::{detect_value, detect_with_editor_value, transfer_curve_value};
use serde_json::Value;

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn transfer_curve_is_odd_bounded_and_near_identity_at_the_origin() {
    let v = transfer_curve_value(0.05, 60.0, 121).unwrap();
    let x = floats(&v["input"]);
    let y = floats(&v["output"]);
    assert_eq!((x.len(), y.len()), (121, 121));
    assert_eq!((x[0], x[120], x[60]), (-60.0, 60.0, 0.0));
    for i in 0..121 {
        assert!((y[i] + y[120 - i]).abs() < 1e-12);
        assert!(y[i].abs() < 20.0);
        assert!(y[i].abs() <= x[i].abs() + 1e-12);
    }
    assert!((y[61] - x[61]).abs() < 1e-2 * x[61].abs());
    assert_eq!(v["saturation"].as_f64().unwrap(), 20.0);
    assert!(transfer_curve_value(0.0, 1.0, 10).is_err());
    assert!(transfer_curve_value(0.1, 1.0, 1).is_err());
}

#[test]
fn detect_matches_the_core_detector() {
    let v = detect_value(r#"{"seed": 4}"#).unwrap();
    let cfg = SceneConfig::default().with_seed(4);
    let scene = synthesize_scene(&cfg).unwrap();
    let want = sliding_trace(&scene.z_linear, cfg.window_k, &HpdInverseOptions::relative(1e-9)).unwrap();
    assert_eq!(floats(&v["linear"]["stat"]), want.stat);
    assert_eq!(v["onset"], 1000);
    assert_eq!(v["nonlinear"]["stat"].as_array().unwrap().len(), want.len());
    let peak = v["linear"]["peak_time"].as_u64().unwrap() as usize;
    assert!((1000..=1000 + 48).contains(&peak));
}

#[test]
fn detect_reports_bad_requests() {
    assert!(detect_value(r#"{"window": 3}"#).unwrap_err().contains("bad request"));
    assert!(detect_value(r#"{"window_k": 1500}"#).is_err());
    assert_eq!(detect_value("").unwrap(), detect_value("{}").unwrap());
}

#[test]
fn editor_trace_lives_in_original_time_and_finds_the_onset() {
    let v = detect_with_editor_value(r#"{"scene": {"seed": 2}}"#).unwrap();
    let kept = v["kept_samples"].as_u64().unwrap();
    assert!((96..2000).contains(&kept));
    assert_eq!(v["edited"]["stat"].as_array().unwrap().len() as u64, kept - 2 * 48 + 1);
    let time: Vec<u64> = v["edited"]["time"].as_array().unwrap().iter().map(|t| t.as_u64().unwrap()).collect();
    assert!(time.windows(2).all(|w| w[0] < w[1]) && *time.last().unwrap() < 2000);
    assert!(v["balanced_accuracy"].as_f64().unwrap() > 0.9);
    let peak = v["edited"]["peak_time"].as_u64().unwrap();
    assert!((1000..1200).contains(&peak), "peak at {peak}");
    assert!(detect_with_editor_value(r#"{"train_seed": 1}"#).is_err());
}
