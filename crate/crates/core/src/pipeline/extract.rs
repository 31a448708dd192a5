//! Manifest -> observation rows: cepstra and feature distance from each
//! take's audio, heart rate from its ECG.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{PipelineConfig, PipelineError};
use crate::ecg_hr::extract_heart_rate;
use crate::features::{enrollment_reference, feature_distance, mfcc, utterance_embedding, UtteranceEmbedding};
use crate::signal_io::{load_audio, load_ecg, DatasetManifest, EmotionLabel, ManifestEntry};
use crate::stats::Observation;

pub const FEATURE_HEADER: [&str; 5] = [
    "subject_id",
    "emotion",
    "take_index",
    "feature_distance",
    "heart_rate_bpm",
];

/// An observation plus the utterance's mean cepstral vector, which the
/// classifiers use as features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub observation: Observation,
    pub mean_cepstra: Vec<f64>,
}

impl FeatureRow {
    /// Classifier input: mean cepstra followed by the feature distance, or
    /// the distance alone.
    pub fn classifier_features(&self, fd_only: bool) -> Vec<f64> {
        if fd_only {
            vec![self.observation.feature_distance]
        } else {
            let mut f = self.mean_cepstra.clone();
            f.push(self.observation.feature_distance);
            f
        }
    }
}

#[derive(Debug, Default)]
pub struct ExtractOutput {
    pub rows: Vec<FeatureRow>,
    /// Takes that could not be processed, with the reason.
    pub failures: Vec<(ManifestEntry, String)>,
}

struct TakeFeatures {
    embedding: UtteranceEmbedding,
    heart_rate_bpm: f64,
}

fn process_take(
    entry: &ManifestEntry,
    config: &PipelineConfig,
    cepstra_dir: Option<&Path>,
) -> Result<TakeFeatures, PipelineError> {
    let clip = load_audio(&entry.audio_path)?;
    let cepstra = mfcc(&clip, &config.features)?;
    if let Some(dir) = cepstra_dir {
        let path = dir.join(format!(
            "{}_{}_{:03}.csv",
            entry.subject_id, entry.emotion, entry.take_index
        ));
        let file = std::fs::File::create(&path).map_err(|e| PipelineError::io(&path, e))?;
        cepstra
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| PipelineError::io(&path, e))?;
    }
    let embedding = utterance_embedding(&cepstra);
    let ecg = load_ecg(&entry.ecg_path)?;
    let hr = extract_heart_rate(&ecg, &config.peaks)?;
    Ok(TakeFeatures {
        embedding,
        heart_rate_bpm: hr.bpm,
    })
}

/// Processes every take in parallel, then measures each take's distance to
/// its subject's enrollment reference (mean of the subject's neutral takes).
/// Output rows follow manifest order.
pub fn extract(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    cepstra_dir: Option<&Path>,
) -> Result<ExtractOutput, PipelineError> {
    config.validate()?;
    if let Some(dir) = cepstra_dir {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let results: Vec<Result<TakeFeatures, PipelineError>> = manifest
        .entries()
        .par_iter()
        .map(|e| process_take(e, config, cepstra_dir))
        .collect();

    let mut out = ExtractOutput::default();
    let mut ok: Vec<(&ManifestEntry, TakeFeatures)> = Vec::new();
    for (entry, res) in manifest.entries().iter().zip(results) {
        match res {
            Ok(t) => ok.push((entry, t)),
            Err(PipelineError::Io { path, source }) => return Err(PipelineError::Io { path, source }),
            Err(err) => {
                log::warn!(
                    "skipping {}/{}/{}: {err}",
                    entry.subject_id,
                    entry.emotion,
                    entry.take_index
                );
                out.failures.push((entry.clone(), err.to_string()));
            }
        }
    }

    for subject in manifest.subjects() {
        let takes: Vec<&(&ManifestEntry, TakeFeatures)> = ok.iter().filter(|(e, _)| e.subject_id == subject).collect();
        if takes.is_empty() {
            continue;
        }
        let enrollment: Vec<(EmotionLabel, UtteranceEmbedding)> =
            takes.iter().map(|(e, t)| (e.emotion, t.embedding.clone())).collect();
        let reference = enrollment_reference(&enrollment)?;
        for (entry, take) in takes {
            let fd = feature_distance(&take.embedding, &reference, &subject)?;
            out.rows.push(FeatureRow {
                observation: Observation {
                    subject_id: entry.subject_id.clone(),
                    emotion: entry.emotion,
                    take_index: entry.take_index,
                    feature_distance: fd.value,
                    heart_rate_bpm: take.heart_rate_bpm,
                },
                mean_cepstra: take.embedding.mean_cepstra.clone(),
            });
        }
    }
    Ok(out)
}

/// Writes feature rows as CSV: the five observation columns, then
/// `mfcc_0..` with the mean cepstra. Values are written at full precision.
pub fn write_features(rows: &[FeatureRow], path: impl AsRef<Path>) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let n_cep = rows.first().map_or(0, |r| r.mean_cepstra.len());
    let mut out = FEATURE_HEADER.join(",");
    for i in 0..n_cep {
        write!(out, ",mfcc_{i}").unwrap();
    }
    out.push('\n');
    for r in rows {
        let o = &r.observation;
        write!(
            out,
            "{},{},{},{},{}",
            o.subject_id, o.emotion, o.take_index, o.feature_distance, o.heart_rate_bpm
        )
        .unwrap();
        for c in &r.mean_cepstra {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| PipelineError::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>, PipelineError> {
    let path = path.as_ref();
    let malformed = |reason: String| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if headers.len() < FEATURE_HEADER.len() || headers.iter().take(5).ne(FEATURE_HEADER.iter().copied()) {
        return Err(malformed(format!(
            "expected header starting {}",
            FEATURE_HEADER.join(",")
        )));
    }
    let n_cep = headers.len() - FEATURE_HEADER.len();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64, PipelineError> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| malformed(format!("line {line}: bad number {:?}", &rec[j])))
        };
        let emotion: EmotionLabel = rec[1].parse()?;
        let take_index: u32 = rec[2]
            .parse()
            .map_err(|_| malformed(format!("line {line}: bad take index {:?}", &rec[2])))?;
        let mean_cepstra = (0..n_cep).map(|k| num(5 + k)).collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureRow {
            observation: Observation {
                subject_id: rec[0].to_string(),
                emotion,
                take_index,
                feature_distance: num(3)?,
                heart_rate_bpm: num(4)?,
            },
            mean_cepstra,
        });
    }
    Ok(rows)
}
