//! JSON model store: one file per fitted cell, `<subject>_<emotion>.json`
//! or `<subject>_combined.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CellKey, PipelineError};
use crate::stats::{predict, LinearModel};

pub const COMBINED: &str = "combined";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub subject_id: String,
    /// Emotion name, or `"combined"`.
    pub emotion: String,
    pub beta0: f64,
    pub beta1: f64,
    pub n: usize,
    pub residual_std: f64,
}

impl ModelRecord {
    pub fn from_model(key: &CellKey, model: &LinearModel) -> Self {
        Self {
            subject_id: key.subject_id.clone(),
            emotion: key.emotion_name().to_string(),
            beta0: model.beta0_hat,
            beta1: model.beta1_hat,
            n: model.n,
            residual_std: model.residual_std,
        }
    }

    pub fn predict(&self, feature_distance: f64) -> f64 {
        predict(self.beta0, self.beta1, feature_distance)
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.json", self.subject_id, self.emotion)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let rec: Self = serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if !(rec.beta0.is_finite() && rec.beta1.is_finite()) {
            return Err(PipelineError::Malformed {
                path: path.to_path_buf(),
                reason: "non-finite coefficients".into(),
            });
        }
        Ok(rec)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf, PipelineError> {
        let path = dir.as_ref().join(self.file_name());
        let text = serde_json::to_string_pretty(self).expect("model record serializes");
        std::fs::write(&path, text + "\n").map_err(|e| PipelineError::io(&path, e))?;
        Ok(path)
    }
}

/// Models keyed by (subject, emotion-or-combined).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelStore {
    models: BTreeMap<(String, String), ModelRecord>,
}

impl ModelStore {
    pub fn insert(&mut self, rec: ModelRecord) {
        self.models.insert((rec.subject_id.clone(), rec.emotion.clone()), rec);
    }

    pub fn get(&self, key: &CellKey) -> Option<&ModelRecord> {
        self.models
            .get(&(key.subject_id.clone(), key.emotion_name().to_string()))
    }

    pub fn records(&self) -> impl Iterator<Item = &ModelRecord> {
        self.models.values()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Loads every `*.json` in `dir`, in file-name order.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| PipelineError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut store = Self::default();
        for p in paths {
            store.insert(ModelRecord::load(&p)?);
        }
        Ok(store)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), PipelineError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        for rec in self.records() {
            rec.save(dir)?;
        }
        Ok(())
    }
}
