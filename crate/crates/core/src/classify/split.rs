use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::signal_io::EmotionLabel;

pub trait HasLabel {
    fn label(&self) -> EmotionLabel;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.66,
            seed: 0,
        }
    }
}

/// Stratified train/test partition. Each label's stratum sends
/// `round(train_fraction * n_label)` seeded-random members to train; both
/// halves keep the input order.
pub fn split<T: HasLabel + Clone>(data: &[T], spec: &SplitSpec) -> (Vec<T>, Vec<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; data.len()];
    for label in EmotionLabel::ALL {
        let mut stratum: Vec<usize> = (0..data.len()).filter(|&i| data[i].label() == label).collect();
        let n_train = (spec.train_fraction * stratum.len() as f64).round() as usize;
        stratum.shuffle(&mut rng);
        for &i in stratum.iter().take(n_train) {
            in_train[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (item, to_train) in data.iter().zip(in_train) {
        if to_train {
            train.push(item.clone());
        } else {
            test.push(item.clone());
        }
    }
    (train, test)
}
