use serde::{Deserialize, Serialize};

use super::{check_data, ClassifierModel, ClassifyError, LabeledVector};
use crate::signal_io::EmotionLabel;

/// Stores the training set. Votes among the `k` nearest (Euclidean)
/// neighbours; equal distances order by training index, tied votes go to
/// the smallest summed distance and then to class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbor {
    pub n_features: usize,
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<EmotionLabel>,
}

impl NearestNeighbor {
    pub fn predict(&self, x: &[f64]) -> EmotionLabel {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes = [0usize; 3];
        let mut summed = [0.0f64; 3];
        for &(d, i) in dist.iter().take(self.k) {
            let c = self.labels[i].index();
            votes[c] += 1;
            summed[c] += d;
        }
        let mut best = EmotionLabel::ALL[0];
        for label in EmotionLabel::ALL {
            let (c, b) = (label.index(), best.index());
            if votes[c] > votes[b] || (votes[c] == votes[b] && votes[c] > 0 && summed[c] < summed[b]) || votes[b] == 0 {
                best = label;
            }
        }
        best
    }
}

pub fn train_knn(data: &[LabeledVector], k: usize) -> Result<ClassifierModel, ClassifyError> {
    let d = check_data(data)?;
    if k == 0 || k > data.len() {
        return Err(ClassifyError::TooFewExamples(format!(
            "k = {k} needs between 1 and {} training examples",
            data.len()
        )));
    }
    Ok(ClassifierModel::NearestNeighbor(NearestNeighbor {
        n_features: d,
        k,
        points: data.iter().map(|v| v.features.clone()).collect(),
        labels: data.iter().map(|v| v.label).collect(),
    }))
}
