//! Emotion classifiers over per-utterance feature vectors.
//!
//! Three algorithms share one model type: classification via regression
//! (one regression tree per class on 0/1 indicator targets, argmax of the
//! tree outputs), Gaussian naive Bayes, and k-nearest-neighbour. Every tie is
//! broken deterministically: class order Joy < Neutral < Anger, then index.

mod gnb;
mod knn;
mod split;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_io::EmotionLabel;

pub use gnb::{train_gnb, GaussianNb};
pub use knn::{train_knn, NearestNeighbor};
pub use split::{split, HasLabel, SplitSpec};
pub use tree::{train_cvr, ClassificationViaRegression, RegressionTree, TreeConfig, TreeNode};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("too few examples: {0}")]
    TooFewExamples(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite feature value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub features: Vec<f64>,
    pub label: EmotionLabel,
    pub subject_id: String,
}

impl HasLabel for LabeledVector {
    fn label(&self) -> EmotionLabel {
        self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ClassificationViaRegression,
    GaussianNaiveBayes,
    NearestNeighbor,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::ClassificationViaRegression,
        Algorithm::GaussianNaiveBayes,
        Algorithm::NearestNeighbor,
    ];

    /// Short name used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::ClassificationViaRegression => "cvr",
            Algorithm::GaussianNaiveBayes => "gnb",
            Algorithm::NearestNeighbor => "knn",
        }
    }

    /// Row label used in the accuracy tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::ClassificationViaRegression => "meta.ClassificationViaRegression",
            Algorithm::GaussianNaiveBayes => "bayes.NaiveBayes",
            Algorithm::NearestNeighbor => "lazy.IBk",
        }
    }

    pub fn from_short_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.short_name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ClassifierModel {
    ClassificationViaRegression(ClassificationViaRegression),
    GaussianNaiveBayes(GaussianNb),
    NearestNeighbor(NearestNeighbor),
}

impl ClassifierModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ClassifierModel::ClassificationViaRegression(_) => Algorithm::ClassificationViaRegression,
            ClassifierModel::GaussianNaiveBayes(_) => Algorithm::GaussianNaiveBayes,
            ClassifierModel::NearestNeighbor(_) => Algorithm::NearestNeighbor,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassifierModel::ClassificationViaRegression(m) => m.n_features,
            ClassifierModel::GaussianNaiveBayes(m) => m.n_features,
            ClassifierModel::NearestNeighbor(m) => m.n_features,
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<EmotionLabel, ClassifyError> {
        if features.len() != self.n_features() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.n_features(),
                got: features.len(),
            });
        }
        Ok(match self {
            ClassifierModel::ClassificationViaRegression(m) => m.predict(features),
            ClassifierModel::GaussianNaiveBayes(m) => m.predict(features),
            ClassifierModel::NearestNeighbor(m) => m.predict(features),
        })
    }

    /// Labels the model can emit, in class order.
    pub fn classes(&self) -> Vec<EmotionLabel> {
        match self {
            ClassifierModel::ClassificationViaRegression(m) => m.trees.iter().map(|(c, _)| *c).collect(),
            ClassifierModel::GaussianNaiveBayes(m) => m.classes.iter().map(|c| c.label).collect(),
            ClassifierModel::NearestNeighbor(m) => {
                let mut c: Vec<EmotionLabel> = m.labels.clone();
                c.sort();
                c.dedup();
                c
            }
        }
    }
}

/// Trains the requested algorithm with its default settings.
pub fn train(algorithm: Algorithm, data: &[LabeledVector]) -> Result<ClassifierModel, ClassifyError> {
    match algorithm {
        Algorithm::ClassificationViaRegression => train_cvr(data, &TreeConfig::default()),
        Algorithm::GaussianNaiveBayes => train_gnb(data),
        Algorithm::NearestNeighbor => train_knn(data, 1),
    }
}

/// Percentage of `test` the model labels correctly.
pub fn classification_accuracy(model: &ClassifierModel, test: &[LabeledVector]) -> Result<f64, ClassifyError> {
    if test.is_empty() {
        return Err(ClassifyError::EmptyTestSet);
    }
    let mut correct = 0usize;
    for v in test {
        if model.predict(&v.features)? == v.label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / test.len() as f64)
}

/// Shared input checks: non-empty, consistent finite features.
pub(crate) fn check_data(data: &[LabeledVector]) -> Result<usize, ClassifyError> {
    let d = data
        .first()
        .map(|v| v.features.len())
        .ok_or_else(|| ClassifyError::TooFewExamples("no training data".into()))?;
    for v in data {
        if v.features.len() != d {
            return Err(ClassifyError::DimensionMismatch {
                expected: d,
                got: v.features.len(),
            });
        }
        if v.features.iter().any(|x| !x.is_finite()) {
            return Err(ClassifyError::NonFinite);
        }
    }
    Ok(d)
}

/// Per-class counts indexed by `EmotionLabel::index`.
pub(crate) fn class_counts(data: &[LabeledVector]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for v in data {
        counts[v.label.index()] += 1;
    }
    counts
}
