use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::classify::{SplitSpec, TreeConfig};
use crate::ecg_hr::PeakConfig;
use crate::features::FeatureConfig;

/// Physiologically admissible heart-rate band, bpm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterWindow {
    pub hr_min: f64,
    pub hr_max: f64,
}

impl Default for FilterWindow {
    fn default() -> Self {
        Self {
            hr_min: 30.0,
            hr_max: 220.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub peaks: PeakConfig,
    pub split: SplitSpec,
    pub tree: TreeConfig,
    pub knn_k: usize,
    pub filter: FilterWindow,
    /// Fraction of each regression cell held out for scoring.
    pub holdout_fraction: f64,
    /// Score regression cells on their own training data instead.
    pub in_sample: bool,
    /// Classify on the feature distance alone instead of cepstra plus distance.
    pub fd_only_classification: bool,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            peaks: PeakConfig::default(),
            split: SplitSpec::default(),
            tree: TreeConfig::default(),
            knn_k: 1,
            filter: FilterWindow::default(),
            holdout_fraction: 0.2,
            in_sample: false,
            fd_only_classification: false,
            output_dir: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.features.validate()?;
        self.peaks.validate()?;
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(PipelineError::Validation(format!("train_fraction {f} outside (0, 1)")));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(PipelineError::Validation(format!(
                "holdout_fraction {} outside (0, 1)",
                self.holdout_fraction
            )));
        }
        if !(self.filter.hr_min > 0.0 && self.filter.hr_max > self.filter.hr_min) {
            return Err(PipelineError::Validation(
                "filter window must satisfy 0 < hr_min < hr_max".into(),
            ));
        }
        if self.knn_k == 0 {
            return Err(PipelineError::Validation("knn_k must be at least 1".into()));
        }
        Ok(())
    }
}
