use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_data, class_counts, ClassifierModel, ClassifyError, LabeledVector};
use crate::signal_io::EmotionLabel;

/// Variance smoothing relative to the largest per-feature variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: EmotionLabel,
    pub prior: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub n_features: usize,
    pub classes: Vec<ClassStats>,
}

impl GaussianNb {
    pub fn log_posterior(&self, class: &ClassStats, x: &[f64]) -> f64 {
        let mut lp = class.prior.ln();
        for ((v, m), var) in x.iter().zip(&class.means).zip(&class.variances) {
            lp -= 0.5 * (2.0 * PI * var).ln() + (v - m) * (v - m) / (2.0 * var);
        }
        lp
    }

    pub fn predict(&self, x: &[f64]) -> EmotionLabel {
        let mut best = (self.classes[0].label, f64::NEG_INFINITY);
        for c in &self.classes {
            let lp = self.log_posterior(c, x);
            if lp > best.1 {
                best = (c.label, lp);
            }
        }
        best.0
    }
}

pub fn train_gnb(data: &[LabeledVector]) -> Result<ClassifierModel, ClassifyError> {
    let d = check_data(data)?;
    let counts = class_counts(data);
    let n = data.len() as f64;

    let column_var = |f: usize| {
        let m = data.iter().map(|v| v.features[f]).sum::<f64>() / n;
        data.iter().map(|v| (v.features[f] - m).powi(2)).sum::<f64>() / n
    };
    let max_var = (0..d).map(column_var).fold(0.0, f64::max);
    let epsilon = if max_var > 0.0 {
        VAR_SMOOTHING * max_var
    } else {
        VAR_SMOOTHING
    };

    let classes = EmotionLabel::ALL
        .into_iter()
        .filter(|l| counts[l.index()] > 0)
        .map(|label| {
            let members: Vec<&[f64]> = data
                .iter()
                .filter(|v| v.label == label)
                .map(|v| v.features.as_slice())
                .collect();
            let k = members.len() as f64;
            let means: Vec<f64> = (0..d).map(|f| members.iter().map(|x| x[f]).sum::<f64>() / k).collect();
            let variances = (0..d)
                .map(|f| members.iter().map(|x| (x[f] - means[f]).powi(2)).sum::<f64>() / k + epsilon)
                .collect();
            ClassStats {
                label,
                prior: k / n,
                means,
                variances,
            }
        })
        .collect();
    Ok(ClassifierModel::GaussianNaiveBayes(GaussianNb {
        n_features: d,
        classes,
    }))
}
