//! Raw signal containers and the loaders that produce them.
//!
//! Speech arrives as mono 16-bit PCM WAV, ECG as CSV text, and a CSV
//! manifest binds both to a subject, an emotion label and a take index.

pub(crate) mod audio;
mod ecg;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audio::{load_audio, write_audio, AUDIO_FULL_SCALE};
pub use ecg::{load_ecg, write_ecg};
pub use manifest::{load_manifest, write_manifest, DatasetManifest, ManifestEntry};

#[derive(Debug, Error)]
pub enum SignalIoError {
    #[error("unsupported format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("corrupt header in {path}: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },
    #[error("empty signal in {0}")]
    EmptySignal(PathBuf),
    #[error("non-uniform sampling in {path}: {reason}")]
    NonUniformSampling { path: PathBuf, reason: String },
    #[error("corrupt row {line} in {path}: {reason}")]
    CorruptRow { path: PathBuf, line: usize, reason: String },
    #[error("duplicate manifest entry ({subject_id}, {emotion}, {take_index})")]
    DuplicateEntry {
        subject_id: String,
        emotion: EmotionLabel,
        take_index: u32,
    },
    #[error("unknown emotion label {0:?}")]
    UnknownEmotion(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The closed set of emotional states. Declaration order is the tie-break
/// order used everywhere (Joy < Neutral < Anger).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Joy,
    Neutral,
    Anger,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 3] = [EmotionLabel::Joy, EmotionLabel::Neutral, EmotionLabel::Anger];

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Joy => "joy",
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Anger => "anger",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = SignalIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joy" => Ok(EmotionLabel::Joy),
            "neutral" => Ok(EmotionLabel::Neutral),
            "anger" => Ok(EmotionLabel::Anger),
            other => Err(SignalIoError::UnknownEmotion(other.to_string())),
        }
    }
}

fn validate_samples(samples: &[f64], sample_rate_hz: f64) -> Result<(), SignalIoError> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(SignalIoError::InvalidSignal(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if samples.is_empty() {
        return Err(SignalIoError::InvalidSignal("no samples".into()));
    }
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(SignalIoError::InvalidSignal(format!("sample {i} is not finite")));
    }
    Ok(())
}

/// A mono speech clip with amplitudes normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    source_id: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, source_id: impl Into<String>) -> Result<Self, SignalIoError> {
        validate_samples(&samples, sample_rate_hz)?;
        Ok(Self {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// A single-lead ECG trace in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    source_id: String,
}

impl EcgRecord {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, source_id: impl Into<String>) -> Result<Self, SignalIoError> {
        validate_samples(&samples, sample_rate_hz)?;
        Ok(Self {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}
