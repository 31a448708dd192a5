use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmotionLabel, SignalIoError};

/// One take. Paths are resolved against the manifest's directory at load time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub emotion: EmotionLabel,
    pub take_index: u32,
    pub audio_path: PathBuf,
    pub ecg_path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    subject_id: String,
    emotion: String,
    take_index: u32,
    audio_path: String,
    ecg_path: String,
}

impl DatasetManifest {
    /// Builds a manifest, rejecting duplicate (subject, emotion, take) keys.
    /// File existence is not checked here; see [`load_manifest`].
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, SignalIoError> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert((e.subject_id.as_str(), e.emotion, e.take_index)) {
                return Err(SignalIoError::DuplicateEntry {
                    subject_id: e.subject_id.clone(),
                    emotion: e.emotion,
                    take_index: e.take_index,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Subject ids in first-appearance order.
    pub fn subjects(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.subject_id.as_str()))
            .map(|e| e.subject_id.clone())
            .collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, SignalIoError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(SignalIoError::MissingFile(path.to_path_buf()));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let expected = ["subject_id", "emotion", "take_index", "audio_path", "ecg_path"];
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(SignalIoError::CorruptHeader {
            path: path.to_path_buf(),
            reason: format!("expected header {}", expected.join(",")),
        });
    }

    let mut entries = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let emotion: EmotionLabel = row.emotion.parse()?;
        let audio_path = base.join(&row.audio_path);
        let ecg_path = base.join(&row.ecg_path);
        for p in [&audio_path, &ecg_path] {
            if !p.is_file() {
                return Err(SignalIoError::MissingFile(p.clone()));
            }
        }
        entries.push(ManifestEntry {
            subject_id: row.subject_id,
            emotion,
            take_index: row.take_index,
            audio_path,
            ecg_path,
        });
    }
    DatasetManifest::new(entries)
}

/// Writes a manifest with paths made relative to `path`'s directory where
/// possible.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<(), SignalIoError> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let rel = |p: &Path| -> String { p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned() };
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for e in manifest.entries() {
        writer
            .serialize(ManifestRow {
                subject_id: e.subject_id.clone(),
                emotion: e.emotion.as_str().to_string(),
                take_index: e.take_index,
                audio_path: rel(&e.audio_path),
                ecg_path: rel(&e.ecg_path),
            })
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|source| SignalIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(path: &Path, err: csv::Error) -> SignalIoError {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => SignalIoError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => SignalIoError::CorruptRow {
            path: path.to_path_buf(),
            line,
            reason: format!("{other:?}"),
        },
    }
}
