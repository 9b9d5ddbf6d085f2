//! On-disk formats: scene CSV pairs with a JSON sidecar, detection traces,
//! ROC tables, model documents and experiment summaries.
//!
//! Numbers are written with Rust's shortest round-trip `f64` formatting,
//! `.` as decimal separator and `\n` line endings, so reloading a file
//! reproduces every value bit for bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::classifier::{DenseLayer, MlpModel, Normalization, StopReason, TrainConfig, TrainingHistory};
use crate::detector::DetectionTrace;
use crate::evaluation::{ExperimentReport, PipelineOptions, RocCurve};
use crate::numerics::{ComplexMatrix, SnapshotMatrix};
use crate::signal::SceneConfig;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> IoResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(fs_err(parent))?;
        }
    }
    fs::write(path, contents).map_err(fs_err(path))
}

fn read_text(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(fs_err(path))
}

// ---------------------------------------------------------------------------
// snapshot matrices
// ---------------------------------------------------------------------------

/// One line per antenna: `re₀,im₀,re₁,im₁,…`.
pub fn matrix_to_csv(z: &SnapshotMatrix) -> String {
    let mut out = String::new();
    for i in 0..z.rows() {
        for (j, v) in z.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{},{}", v.re, v.im);
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str, path: &Path) -> IoResult<SnapshotMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| IoError::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(format!("'{f}': {e}"))))
            .collect::<IoResult<_>>()?;
        if !values.len().is_multiple_of(2) {
            return Err(parse_err(format!("{} fields, expected re,im pairs", values.len())));
        }
        let row: Vec<Complex64> = values.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(format!("{} samples, previous rows had {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let m = rows.len();
    let l = rows.first().map_or(0, Vec::len);
    let data = rows.into_iter().flatten().collect();
    ComplexMatrix::from_row_major(m, l, data).map_err(|e| IoError::Invalid {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub const SCENE_LINEAR_FILE: &str = "z_linear.csv";
pub const SCENE_NONLINEAR_FILE: &str = "z_nonlinear.csv";
pub const SCENE_CONFIG_FILE: &str = "scene.json";

/// Files produced by [`write_scene`].
#[derive(Debug, Clone)]
pub struct SceneFiles {
    pub linear: PathBuf,
    pub nonlinear: PathBuf,
    pub config: PathBuf,
}

impl SceneFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            linear: dir.join(SCENE_LINEAR_FILE),
            nonlinear: dir.join(SCENE_NONLINEAR_FILE),
            config: dir.join(SCENE_CONFIG_FILE),
        }
    }

    pub fn all(&self) -> [&Path; 3] {
        [&self.linear, &self.nonlinear, &self.config]
    }
}

pub fn write_scene(dir: &Path, scene: &crate::signal::Scene) -> IoResult<SceneFiles> {
    let files = SceneFiles::in_dir(dir);
    write_file(&files.linear, matrix_to_csv(&scene.z_linear).as_bytes())?;
    write_file(&files.nonlinear, matrix_to_csv(&scene.z_nonlinear).as_bytes())?;
    let json = to_json_pretty(&scene.config);
    write_file(&files.config, json.as_bytes())?;
    Ok(files)
}

pub fn read_scene(dir: &Path) -> IoResult<crate::signal::Scene> {
    let files = SceneFiles::in_dir(dir);
    let config: SceneConfig =
        serde_json::from_str(&read_text(&files.config)?).map_err(|source| IoError::Json {
            path: files.config.clone(),
            source,
        })?;
    let z_linear = matrix_from_csv(&read_text(&files.linear)?, &files.linear)?;
    let z_nonlinear = matrix_from_csv(&read_text(&files.nonlinear)?, &files.nonlinear)?;
    if (z_linear.rows(), z_linear.cols()) != (config.num_antennas, config.num_samples)
        || (z_nonlinear.rows(), z_nonlinear.cols()) != (z_linear.rows(), z_linear.cols())
    {
        return Err(IoError::Invalid {
            path: dir.to_path_buf(),
            msg: "matrix dimensions disagree with scene.json".into(),
        });
    }
    Ok(crate::signal::Scene {
        soi_active_mask: (0..config.num_samples).map(|t| t >= config.onset).collect(),
        z_linear,
        z_nonlinear,
        config,
    })
}

fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// traces and ROC tables
// ---------------------------------------------------------------------------

/// `edited_index,original_time,statistic,window_start_time`, one row per
/// window position.
pub fn trace_to_csv(trace: &DetectionTrace) -> String {
    let mut out = String::from("edited_index,original_time,statistic,window_start_time\n");
    for (((i, t), s), w) in trace
        .index_map
        .iter()
        .zip(&trace.original_time)
        .zip(&trace.stat)
        .zip(&trace.window_start_time)
    {
        let _ = writeln!(out, "{i},{t},{s},{w}");
    }
    out
}

pub fn trace_from_csv(text: &str, window_k: usize, path: &Path) -> IoResult<DetectionTrace> {
    let mut trace = DetectionTrace {
        stat: Vec::new(),
        index_map: Vec::new(),
        original_time: Vec::new(),
        window_start_time: Vec::new(),
        window_k,
    };
    for (n, line) in text.lines().enumerate().skip(1) {
        let parse_err = |msg: String| IoError::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(format!("{} fields, expected 4", f.len())));
        }
        trace.index_map.push(f[0].parse().map_err(|e| parse_err(format!("{e}")))?);
        trace.original_time.push(f[1].parse().map_err(|e| parse_err(format!("{e}")))?);
        trace.stat.push(f[2].parse().map_err(|e| parse_err(format!("{e}")))?);
        trace.window_start_time.push(f[3].parse().map_err(|e| parse_err(format!("{e}")))?);
    }
    Ok(trace)
}

pub fn roc_to_csv(roc: &RocCurve) -> String {
    let mut out = String::from("gamma,fpr,tpr\n");
    for p in &roc.points {
        let _ = writeln!(out, "{},{},{}", p.gamma, p.fpr, p.tpr);
    }
    out
}

// ---------------------------------------------------------------------------
// model documents
// ---------------------------------------------------------------------------

pub const MODEL_SCHEMA: &str = "nlglrt-mlp/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerDoc {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDoc {
    schema: String,
    shape_chain: Vec<usize>,
    hidden_activation: String,
    output_activation: String,
    normalization: Normalization,
    layers: Vec<LayerDoc>,
    train_config: Option<TrainConfig>,
    #[serde(default)]
    flagged_fraction: Option<f64>,
    #[serde(default)]
    distance_threshold: Option<f64>,
}

/// Model plus the training provenance stored alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: MlpModel,
    pub train_config: Option<TrainConfig>,
    pub flagged_fraction: Option<f64>,
    pub distance_threshold: Option<f64>,
}

pub fn model_to_json(file: &ModelFile) -> String {
    let doc = ModelDoc {
        schema: MODEL_SCHEMA.into(),
        shape_chain: file.model.shape_chain(),
        hidden_activation: "tanh".into(),
        output_activation: "softmax".into(),
        normalization: file.model.normalization.clone(),
        layers: file
            .model
            .layers
            .iter()
            .map(|l| LayerDoc {
                inputs: l.inputs,
                outputs: l.outputs,
                weights: l.weights.clone(),
                biases: l.biases.clone(),
            })
            .collect(),
        train_config: file.train_config.clone(),
        flagged_fraction: file.flagged_fraction,
        distance_threshold: file.distance_threshold,
    };
    to_json_pretty(&doc)
}

pub fn model_from_json(text: &str, path: &Path) -> IoResult<ModelFile> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let invalid = |msg: String| IoError::Invalid {
        path: path.to_path_buf(),
        msg,
    };
    if doc.schema != MODEL_SCHEMA {
        return Err(invalid(format!("schema '{}', expected '{MODEL_SCHEMA}'", doc.schema)));
    }
    let layers = doc
        .layers
        .into_iter()
        .map(|l| DenseLayer {
            inputs: l.inputs,
            outputs: l.outputs,
            weights: l.weights,
            biases: l.biases,
        })
        .collect();
    let model = MlpModel::from_layers(doc.normalization, layers).map_err(|e| invalid(e.to_string()))?;
    if model.shape_chain() != doc.shape_chain {
        return Err(invalid(format!(
            "shape_chain {:?} disagrees with layers {:?}",
            doc.shape_chain,
            model.shape_chain()
        )));
    }
    Ok(ModelFile {
        model,
        train_config: doc.train_config,
        flagged_fraction: doc.flagged_fraction,
        distance_threshold: doc.distance_threshold,
    })
}

pub fn write_model(path: &Path, file: &ModelFile) -> IoResult<()> {
    write_file(path, model_to_json(file).as_bytes())
}

pub fn read_model(path: &Path) -> IoResult<ModelFile> {
    model_from_json(&read_text(path)?, path)
}

/// `epoch,loss,best_loss,status`; the last row carries the stop reason.
pub fn training_log_to_csv(history: &TrainingHistory) -> String {
    let mut out = String::from("epoch,loss,best_loss,status\n");
    let last = history.epochs.len().saturating_sub(1);
    for (i, e) in history.epochs.iter().enumerate() {
        let status = if i == last {
            match history.stop {
                StopReason::EarlyStop => "early_stop",
                StopReason::MaxEpochs => "max_epochs",
            }
        } else {
            ""
        };
        let _ = writeln!(out, "{},{},{},{status}", e.epoch, e.loss, e.best_loss);
    }
    out
}

// ---------------------------------------------------------------------------
// experiment reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModeSummary {
    pub mode: String,
    pub auc: f64,
    pub peak_hit_rate: f64,
    pub peak_times: Vec<usize>,
    pub kept_samples: Vec<usize>,
    pub evaluated_windows: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub schema: String,
    pub config_digest: String,
    pub scene: SceneConfig,
    pub options: PipelineOptions,
    pub seeds: Vec<u64>,
    /// ROC rates are pooled over all seeds, not averaged per seed.
    pub roc_pooled_over_seeds: bool,
    pub modes: Vec<ModeSummary>,
}

pub const SUMMARY_SCHEMA: &str = "nlglrt-summary/v1";

pub fn summarize(report: &ExperimentReport) -> Summary {
    Summary {
        schema: SUMMARY_SCHEMA.into(),
        config_digest: report.config_digest.clone(),
        scene: report.config.clone(),
        options: report.options,
        seeds: report.seeds.clone(),
        roc_pooled_over_seeds: true,
        modes: report
            .modes
            .iter()
            .map(|m| ModeSummary {
                mode: m.mode.as_str().into(),
                auc: m.roc.auc,
                peak_hit_rate: m.peak_hit_rate,
                peak_times: m.trials.iter().map(|t| t.peak_original_time).collect(),
                kept_samples: m.trials.iter().map(|t| t.kept_samples).collect(),
                evaluated_windows: m.trials.iter().map(|t| t.trace.len()).collect(),
            })
            .collect(),
    }
}

/// Writes `trace_<mode>_<seed>.csv`, `roc_<mode>.csv` and `summary.json`.
/// Returns the written paths in a fixed order.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> IoResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for m in &report.modes {
        for t in &m.trials {
            let p = dir.join(format!("trace_{}_{}.csv", m.mode, t.seed));
            write_file(&p, trace_to_csv(&t.trace).as_bytes())?;
            written.push(p);
        }
        let p = dir.join(format!("roc_{}.csv", m.mode));
        write_file(&p, roc_to_csv(&m.roc).as_bytes())?;
        written.push(p);
    }
    let p = dir.join("summary.json");
    write_file(&p, to_json_pretty(&summarize(report)).as_bytes())?;
    written.push(p);
    Ok(written)
}

pub fn read_summary(path: &Path) -> IoResult<Summary> {
    serde_json::from_str(&read_text(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// SHA-256 over the concatenated contents of `paths`, each prefixed by its
/// file name.
pub fn digest_files(paths: &[&Path]) -> IoResult<String> {
    let mut buf = Vec::new();
    for p in paths {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        buf.extend_from_slice(name.as_bytes());
        buf.push(0);
        buf.extend_from_slice(&fs::read(p).map_err(fs_err(p))?);
    }
    Ok(crate::evaluation::hex_digest(&buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_csv_layout() {
        let z = ComplexMatrix::from_row_major(
            2,
            2,
            vec![
                Complex64::new(1.0, -0.5),
                Complex64::new(0.1, 2.0),
                Complex64::new(-3.0, 0.0),
                Complex64::new(1e-17, 4.5),
            ],
        )
        .unwrap();
        let csv = matrix_to_csv(&z);
        assert_eq!(csv, "1,-0.5,0.1,2\n-3,0,0.00000000000000001,4.5\n");
        assert_eq!(matrix_from_csv(&csv, Path::new("x")).unwrap(), z);
    }

    #[test]
    fn ragged_csv_is_rejected_with_line() {
        let err = matrix_from_csv("1,2,3,4\n1,2\n", Path::new("m.csv")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(matrix_from_csv("1,2,3\n", Path::new("m.csv")).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let t = DetectionTrace {
            stat: vec![4.000000000000001, 17.25],
            index_map: vec![48, 49],
            original_time: vec![50, 52],
            window_start_time: vec![3, 5],
            window_k: 48,
        };
        let csv = trace_to_csv(&t);
        assert!(csv.starts_with(
            "edited_index,original_time,statistic,window_start_time\n48,50,4.000000000000001,3\n"
        ));
        assert_eq!(trace_from_csv(&csv, 48, Path::new("t")).unwrap(), t);
    }
}
