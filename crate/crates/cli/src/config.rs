//! Run configuration: one TOML document whose every field defaults to
//! setup (a).

use std::path::{Path, PathBuf};

use nlglrt::classifier::TrainConfig;
use nlglrt::evaluation::{Mode, PipelineOptions};
use nlglrt::numerics::HpdInverseOptions;
use nlglrt::signal::SceneConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    /// Fraction of training samples labelled nonlinear; sets `d_T`.
    pub flagged_fraction: f64,
    /// Whether the classifier modes may run at all.
    pub enabled: bool,
    /// Seed of the dedicated training scene; the held-out check uses the
    /// next seed.
    pub train_seed: u64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        Self {
            flagged_fraction: 0.5,
            enabled: true,
            train_seed: 9001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    /// Diagonal loading as a multiple of the mean diagonal of `R̂_old`.
    pub loading_epsilon: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { loading_epsilon: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub seeds: Vec<u64>,
    pub guard: usize,
    pub modes: Vec<String>,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            seeds: (1..=20).collect(),
            guard: 0,
            modes: Mode::ALL.iter().map(|m| m.as_str().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub scene: SceneConfig,
    pub train: TrainConfig,
    pub classifier: ClassifierSection,
    pub detector: DetectorSection,
    pub evaluation: EvaluationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            scene: SceneConfig::default(),
            train: TrainConfig::default(),
            classifier: ClassifierSection::default(),
            detector: DetectorSection::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        cfg.validate()
            .map_err(|msg| CliError::config(format!("{}: {msg}", path.display())))?;
        Ok(cfg)
    }

    /// Checks every nested invariant; the message names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        self.scene.validate().map_err(|e| format!("[scene] {e}"))?;
        self.train.validate().map_err(|e| format!("[train] {e}"))?;
        let f = self.classifier.flagged_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(format!("[classifier] flagged_fraction must lie in (0, 1) (got {f})"));
        }
        let eps = self.detector.loading_epsilon;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(format!("[detector] loading_epsilon must be >= 0 (got {eps})"));
        }
        if self.evaluation.seeds.is_empty() {
            return Err("[evaluation] seeds must not be empty".into());
        }
        let modes = self.modes().map_err(|e| format!("[evaluation] {e}"))?;
        if modes.is_empty() {
            return Err("[evaluation] modes must not be empty".into());
        }
        if !self.classifier.enabled && modes.iter().any(|m| m.uses_classifier()) {
            return Err("[evaluation] classifier modes requested but [classifier] enabled = false".into());
        }
        Ok(())
    }

    pub fn modes(&self) -> Result<Vec<Mode>, String> {
        self.evaluation.modes.iter().map(|m| m.parse()).collect()
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            loading: HpdInverseOptions::relative(self.detector.loading_epsilon),
            guard: self.evaluation.guard,
        }
    }
}
