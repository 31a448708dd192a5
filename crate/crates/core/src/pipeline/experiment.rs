//! The regression experiments (per-emotion cells vs. pooled per subject),
//! their comparison, the classifier sweep and the general-model score.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::FeatureRow;
use super::filter::filter_observations;
use super::store::{ModelRecord, ModelStore, COMBINED};
use super::{derive_seed, PipelineConfig, PipelineError};
use crate::classify::{
    classification_accuracy, split, train_cvr, train_gnb, train_knn, Algorithm, ClassifierModel, ClassifyError,
    LabeledVector, SplitSpec,
};
use crate::signal_io::EmotionLabel;
use crate::stats::{fit_ols, relative_error, sample_mean, Observation, ScoreRow};

/// A regression cell: one subject and one emotion, or the subject's pooled
/// data when `emotion` is `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub subject_id: String,
    pub emotion: Option<EmotionLabel>,
}

impl CellKey {
    pub fn new(subject_id: impl Into<String>, emotion: Option<EmotionLabel>) -> Self {
        Self {
            subject_id: subject_id.into(),
            emotion,
        }
    }

    pub fn emotion_name(&self) -> &'static str {
        self.emotion.map_or(COMBINED, EmotionLabel::as_str)
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.subject_id, self.emotion_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub model: ModelRecord,
    pub score: ScoreRow,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub cells: Vec<CellResult>,
    /// Cells that could not be fitted or scored, with the reason.
    pub failures: Vec<(CellKey, String)>,
}

impl ExperimentOutput {
    pub fn get(&self, key: &CellKey) -> Option<&CellResult> {
        self.cells.iter().find(|c| &c.key == key)
    }

    pub fn subjects(&self) -> Vec<String> {
        unique_in_order(self.cells.iter().map(|c| c.key.subject_id.as_str()))
    }

    pub fn store(&self) -> ModelStore {
        let mut s = ModelStore::default();
        for c in &self.cells {
            s.insert(c.model.clone());
        }
        s
    }
}

fn unique_in_order<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    items.filter(|s| seen.insert(*s)).map(str::to_string).collect()
}

/// Splits one cell into (train, test). Both halves are ordered by take
/// index, and the draw depends only on the seed and the cell key.
fn cell_holdout(
    cell: &[&Observation],
    key: &CellKey,
    config: &PipelineConfig,
) -> Result<(Vec<Observation>, Vec<Observation>), PipelineError> {
    let mut sorted: Vec<Observation> = cell.iter().map(|o| (*o).clone()).collect();
    sorted.sort_by_key(|o| o.take_index);
    let n = sorted.len();
    if config.in_sample {
        if n < 2 {
            return Err(PipelineError::CellTooSmall(key.clone(), format!("{n} observation(s)")));
        }
        return Ok((sorted.clone(), sorted));
    }
    let n_test = ((config.holdout_fraction * n as f64).round() as usize).max(1);
    if n < n_test + 2 {
        return Err(PipelineError::CellTooSmall(
            key.clone(),
            format!("{n} observation(s), need 2 to fit plus {n_test} held out"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &format!("holdout/{key}")));
    order.shuffle(&mut rng);
    let mut is_test = vec![false; n];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (test, train): (Vec<_>, Vec<_>) = sorted.into_iter().zip(is_test).partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(o, _)| o).collect(),
        test.into_iter().map(|(o, _)| o).collect(),
    ))
}

fn score(model: &ModelRecord, test: &[Observation]) -> Result<ScoreRow, PipelineError> {
    let errors = test
        .iter()
        .map(|o| relative_error(model.predict(o.feature_distance), o.heart_rate_bpm))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreRow::from_errors(&errors)?)
}

fn fit_or_lookup(
    key: &CellKey,
    train: &[Observation],
    store: Option<&ModelStore>,
) -> Result<ModelRecord, PipelineError> {
    if let Some(rec) = store.and_then(|s| s.get(key)) {
        return Ok(rec.clone());
    }
    let points: Vec<(f64, f64)> = train.iter().map(|o| (o.feature_distance, o.heart_rate_bpm)).collect();
    let model = fit_ols(&points)?;
    Ok(ModelRecord::from_model(key, &model))
}

fn cells_of(observations: &[Observation]) -> Vec<(CellKey, Vec<&Observation>)> {
    let subjects = unique_in_order(observations.iter().map(|o| o.subject_id.as_str()));
    let mut cells = Vec::new();
    for s in subjects {
        for e in EmotionLabel::ALL {
            let members: Vec<&Observation> = observations
                .iter()
                .filter(|o| o.subject_id == s && o.emotion == e)
                .collect();
            if !members.is_empty() {
                cells.push((CellKey::new(s.clone(), Some(e)), members));
            }
        }
    }
    cells
}

fn collect(results: Vec<(CellKey, Result<CellResult, PipelineError>)>) -> ExperimentOutput {
    let mut out = ExperimentOutput::default();
    for (key, r) in results {
        match r {
            Ok(c) => out.cells.push(c),
            Err(e) => {
                log::warn!("cell {key}: {e}");
                out.failures.push((key, e.to_string()));
            }
        }
    }
    out
}

/// One line per (subject, emotion) cell, fitted on the cell's training
/// portion and scored on its held-out portion. Failing cells are listed,
/// not fatal. Models present in `store` are used instead of refitting.
pub fn run_experiment_separate(
    observations: &[Observation],
    config: &PipelineConfig,
    store: Option<&ModelStore>,
) -> ExperimentOutput {
    let results = cells_of(observations)
        .into_par_iter()
        .map(|(key, members)| {
            let r = cell_holdout(&members, &key, config).and_then(|(train, test)| {
                let model = fit_or_lookup(&key, &train, store)?;
                Ok(CellResult {
                    score: score(&model, &test)?,
                    key: key.clone(),
                    model,
                    n_train: train.len(),
                    n_test: test.len(),
                })
            });
            (key, r)
        })
        .collect();
    collect(results)
}

/// One line per subject over all emotions pooled. Train and test sets are
/// the unions of the per-emotion holdout splits, so both experiments are
/// scored on the same held-out takes.
pub fn run_experiment_combined(
    observations: &[Observation],
    config: &PipelineConfig,
    store: Option<&ModelStore>,
) -> ExperimentOutput {
    let subjects = unique_in_order(observations.iter().map(|o| o.subject_id.as_str()));
    let cells = cells_of(observations);
    let results = subjects
        .into_par_iter()
        .map(|subject| {
            let key = CellKey::new(subject.clone(), None);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (cell_key, members) in cells.iter().filter(|(k, _)| k.subject_id == subject) {
                match cell_holdout(members, cell_key, config) {
                    Ok((tr, te)) => {
                        train.extend(tr);
                        test.extend(te);
                    }
                    // Too small to hold out: all of it trains.
                    Err(_) => train.extend(members.iter().map(|o| (*o).clone())),
                }
            }
            let r = if train.len() < 2 || test.is_empty() {
                Err(PipelineError::SubjectTooSmall(
                    subject.clone(),
                    format!("{} training and {} held-out observations", train.len(), test.len()),
                ))
            } else {
                fit_or_lookup(&key, &train, store).and_then(|model| {
                    Ok(CellResult {
                        score: score(&model, &test)?,
                        key: key.clone(),
                        model,
                        n_train: train.len(),
                        n_test: test.len(),
                    })
                })
            };
            (key, r)
        })
        .collect();
    collect(results)
}

/// Per-subject relative errors in percent: pooled model, mean of the
/// per-emotion cells, and each emotion cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub subject_id: String,
    pub combined: f64,
    pub average: f64,
    pub joy: Option<f64>,
    pub neutral: Option<f64>,
    pub anger: Option<f64>,
    /// Mean separate error strictly below the combined error.
    pub separate_better: bool,
}

pub fn compare_experiments(
    separate: &ExperimentOutput,
    combined: &ExperimentOutput,
) -> Result<Vec<ComparisonRow>, PipelineError> {
    let sep_subjects = separate.subjects();
    let comb_subjects = combined.subjects();
    let a: HashSet<&String> = sep_subjects.iter().collect();
    let b: HashSet<&String> = comb_subjects.iter().collect();
    if a != b {
        let mut diff: Vec<&String> = a.symmetric_difference(&b).copied().collect();
        diff.sort();
        return Err(PipelineError::SubjectMismatch(format!("{diff:?}")));
    }
    sep_subjects
        .into_iter()
        .map(|s| {
            let err = |e: EmotionLabel| {
                separate
                    .get(&CellKey::new(s.clone(), Some(e)))
                    .map(|c| c.score.relative_error_pct)
            };
            let (joy, neutral, anger) = (
                err(EmotionLabel::Joy),
                err(EmotionLabel::Neutral),
                err(EmotionLabel::Anger),
            );
            let present: Vec<f64> = [joy, neutral, anger].into_iter().flatten().collect();
            let average = sample_mean(&present)?;
            let combined = combined
                .get(&CellKey::new(s.clone(), None))
                .expect("subject sets checked above")
                .score
                .relative_error_pct;
            Ok(ComparisonRow {
                subject_id: s,
                combined,
                average,
                joy,
                neutral,
                anger,
                separate_better: average < combined,
            })
        })
        .collect()
}

/// Prediction accuracy times classification accuracy, both in percent.
pub fn general_model_score(
    prediction_accuracy_pct: f64,
    classification_accuracy_pct: f64,
) -> Result<f64, PipelineError> {
    for v in [prediction_accuracy_pct, classification_accuracy_pct] {
        if !(0.0..=100.0).contains(&v) {
            return Err(PipelineError::OutOfRange(v));
        }
    }
    Ok(prediction_accuracy_pct * classification_accuracy_pct / 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMatrixRow {
    pub algorithm: Algorithm,
    /// Held-out accuracy per subject, aligned with `ClassifierMatrix::subjects`;
    /// `None` where the classifier could not be trained.
    pub accuracies: Vec<Option<f64>>,
}

/// Algorithms x subjects accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMatrix {
    pub subjects: Vec<String>,
    pub rows: Vec<ClassifierMatrixRow>,
}

impl ClassifierMatrix {
    pub fn max_accuracy(&self) -> Vec<Option<f64>> {
        (0..self.subjects.len())
            .map(|j| {
                self.rows
                    .iter()
                    .filter_map(|r| r.accuracies[j])
                    .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            })
            .collect()
    }

    pub fn min_error(&self) -> Vec<Option<f64>> {
        self.max_accuracy().into_iter().map(|m| m.map(|v| 100.0 - v)).collect()
    }

    /// Mean accuracy over the subjects each algorithm was trained on.
    pub fn averages(&self) -> Vec<(Algorithm, Option<f64>)> {
        self.rows
            .iter()
            .map(|r| {
                let present: Vec<f64> = r.accuracies.iter().flatten().copied().collect();
                (r.algorithm, sample_mean(&present).ok())
            })
            .collect()
    }
}

fn train_with(
    algorithm: Algorithm,
    data: &[LabeledVector],
    config: &PipelineConfig,
) -> Result<ClassifierModel, ClassifyError> {
    match algorithm {
        Algorithm::ClassificationViaRegression => train_cvr(data, &config.tree),
        Algorithm::GaussianNaiveBayes => train_gnb(data),
        Algorithm::NearestNeighbor => train_knn(data, config.knn_k),
    }
}

/// Per-subject stratified split, then train and score every algorithm.
pub fn classifier_sweep(rows: &[FeatureRow], algorithms: &[Algorithm], config: &PipelineConfig) -> ClassifierMatrix {
    let subjects = unique_in_order(rows.iter().map(|r| r.observation.subject_id.as_str()));
    let per_subject: Vec<Vec<Option<f64>>> = subjects
        .par_iter()
        .map(|s| {
            let mut data: Vec<LabeledVector> = rows
                .iter()
                .filter(|r| &r.observation.subject_id == s)
                .map(|r| LabeledVector {
                    features: r.classifier_features(config.fd_only_classification),
                    label: r.observation.emotion,
                    subject_id: s.clone(),
                })
                .collect();
            // Canonical order so the split does not depend on row order.
            let mut keyed: Vec<(EmotionLabel, u32, LabeledVector)> = rows
                .iter()
                .filter(|r| &r.observation.subject_id == s)
                .map(|r| r.observation.take_index)
                .zip(data.drain(..))
                .map(|(t, v)| (v.label, t, v))
                .collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
            let data: Vec<LabeledVector> = keyed.into_iter().map(|(_, _, v)| v).collect();

            let spec = SplitSpec {
                train_fraction: config.split.train_fraction,
                seed: derive_seed(config.seed ^ config.split.seed, &format!("classify/{s}")),
            };
            let (train, test) = split(&data, &spec);
            algorithms
                .iter()
                .map(|&a| {
                    let acc = train_with(a, &train, config).and_then(|m| classification_accuracy(&m, &test));
                    match acc {
                        Ok(v) => Some(v),
                        Err(e) => {
                            log::warn!("{} on {s}: {e}", a.short_name());
                            None
                        }
                    }
                })
                .collect()
        })
        .collect();
    let rows = algorithms
        .iter()
        .enumerate()
        .map(|(i, &algorithm)| ClassifierMatrixRow {
            algorithm,
            accuracies: per_subject.iter().map(|accs| accs[i]).collect(),
        })
        .collect();
    ClassifierMatrix { subjects, rows }
}

/// Per-subject errors and accuracies for the three emotion cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateRow {
    pub subject_id: String,
    pub joy: Option<ScoreRow>,
    pub neutral: Option<ScoreRow>,
    pub anger: Option<ScoreRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierAverage {
    pub algorithm: Algorithm,
    pub average_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub table_separate: Vec<SeparateRow>,
    pub table_combined_vs_separate: Vec<ComparisonRow>,
    pub classifier_matrix: ClassifierMatrix,
    pub classifier_averages: Vec<ClassifierAverage>,
    /// Mean accuracy over all per-emotion cells.
    pub prediction_accuracy_pct: f64,
    /// Average accuracy of the classifier used by the general model.
    pub classification_accuracy_pct: f64,
    pub general_model_pct: f64,
    pub models: Vec<ModelRecord>,
    pub n_observations: usize,
    pub n_rejected: usize,
    pub failed_cells: Vec<(CellKey, String)>,
}

impl EvaluationReport {
    pub fn separate_rows(separate: &ExperimentOutput) -> Vec<SeparateRow> {
        separate
            .subjects()
            .into_iter()
            .map(|s| {
                let cell = |e| separate.get(&CellKey::new(s.clone(), Some(e))).map(|c| c.score);
                SeparateRow {
                    joy: cell(EmotionLabel::Joy),
                    neutral: cell(EmotionLabel::Neutral),
                    anger: cell(EmotionLabel::Anger),
                    subject_id: s,
                }
            })
            .collect()
    }
}

/// Runs every experiment on extracted feature rows.
///
/// Rows are filtered first; the general model multiplies the mean
/// per-emotion prediction accuracy by the classification-via-regression
/// average accuracy (or the best available average if that classifier
/// could not be trained anywhere).
pub fn evaluate(
    rows: &[FeatureRow],
    config: &PipelineConfig,
    store: Option<&ModelStore>,
) -> Result<EvaluationReport, PipelineError> {
    config.validate()?;
    let observations: Vec<Observation> = rows.iter().map(|r| r.observation.clone()).collect();
    let (kept, rejected) = filter_observations(observations, &config.filter);
    let kept_keys: HashSet<(&str, EmotionLabel, u32)> = kept
        .iter()
        .map(|o| (o.subject_id.as_str(), o.emotion, o.take_index))
        .collect();
    let kept_rows: Vec<FeatureRow> = rows
        .iter()
        .filter(|r| {
            kept_keys.contains(&(
                r.observation.subject_id.as_str(),
                r.observation.emotion,
                r.observation.take_index,
            ))
        })
        .cloned()
        .collect();

    let separate = run_experiment_separate(&kept, config, store);
    let combined = run_experiment_combined(&kept, config, store);
    let comparison = compare_experiments(&separate, &combined)?;
    let matrix = classifier_sweep(&kept_rows, &Algorithm::ALL, config);
    let averages: Vec<ClassifierAverage> = matrix
        .averages()
        .into_iter()
        .map(|(algorithm, average_accuracy)| ClassifierAverage {
            algorithm,
            average_accuracy,
        })
        .collect();

    let cell_acc: Vec<f64> = separate.cells.iter().map(|c| c.score.accuracy_pct).collect();
    let prediction_accuracy_pct = sample_mean(&cell_acc)?;
    let classification_accuracy_pct = averages
        .iter()
        .find(|a| a.algorithm == Algorithm::ClassificationViaRegression)
        .and_then(|a| a.average_accuracy)
        .or_else(|| averages.iter().filter_map(|a| a.average_accuracy).reduce(f64::max))
        .unwrap_or(0.0);
    let general_model_pct =
        general_model_score(prediction_accuracy_pct.clamp(0.0, 100.0), classification_accuracy_pct)?;

    let mut failed_cells = separate.failures.clone();
    failed_cells.extend(combined.failures.iter().cloned());
    let models = separate
        .cells
        .iter()
        .chain(&combined.cells)
        .map(|c| c.model.clone())
        .collect();

    Ok(EvaluationReport {
        table_separate: EvaluationReport::separate_rows(&separate),
        table_combined_vs_separate: comparison,
        classifier_matrix: matrix,
        classifier_averages: averages,
        prediction_accuracy_pct,
        classification_accuracy_pct,
        general_model_pct,
        models,
        n_observations: rows.len(),
        n_rejected: rejected.len(),
        failed_cells,
    })
}
