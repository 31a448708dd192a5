//! Least-squares line fitting, descriptive statistics and the relative-error
//! scoring used by every experiment table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_io::EmotionLabel;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all x values are equal; the slope is undefined")]
    DegenerateX,
    #[error("measured heart rate must be positive, got {0}")]
    NonPositiveMeasured(f64),
    #[error("non-finite input")]
    NonFinite,
}

/// One (subject, emotion, feature distance, heart rate) row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub subject_id: String,
    pub emotion: EmotionLabel,
    pub take_index: u32,
    pub feature_distance: f64,
    pub heart_rate_bpm: f64,
}

/// Fitted line `y = beta0_hat + beta1_hat * x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub beta0_hat: f64,
    pub beta1_hat: f64,
    pub n: usize,
    pub s_xx: f64,
    pub s_xy: f64,
    /// Sample standard deviation of the in-sample residuals.
    pub residual_std: f64,
}

impl LinearModel {
    pub fn predict(&self, x: f64) -> f64 {
        predict(self.beta0_hat, self.beta1_hat, x)
    }
}

pub fn predict(beta0: f64, beta1: f64, x: f64) -> f64 {
    beta0 + beta1 * x
}

/// Mean with one residual-correction pass.
fn mean(values: impl Iterator<Item = f64> + Clone) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for v in values.clone() {
        sum += v;
        n += 1;
    }
    let m = sum / n as f64;
    let correction: f64 = values.map(|v| v - m).sum();
    (m + correction / n as f64, n)
}

/// Ordinary least squares with two-pass centred sums.
pub fn fit_ols(points: &[(f64, f64)]) -> Result<LinearModel, StatsError> {
    let n = points.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints { needed: 2, got: n });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (x_bar, _) = mean(points.iter().map(|p| p.0));
    let (y_bar, _) = mean(points.iter().map(|p| p.1));
    let mut s_xx = 0.0;
    let mut s_xy = 0.0;
    for &(x, y) in points {
        let dx = x - x_bar;
        s_xx += dx * dx;
        s_xy += dx * (y - y_bar);
    }
    if s_xx == 0.0 || points.iter().all(|p| p.0 == points[0].0) {
        return Err(StatsError::DegenerateX);
    }
    let beta1_hat = s_xy / s_xx;
    let beta0_hat = y_bar - beta1_hat * x_bar;
    let residuals: Vec<f64> = points
        .iter()
        .map(|&(x, y)| y - predict(beta0_hat, beta1_hat, x))
        .collect();
    let residual_std = summary_stats(&residuals)?.std_dev;
    Ok(LinearModel {
        beta0_hat,
        beta1_hat,
        n,
        s_xx,
        s_xy,
        residual_std,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample variance with the n - 1 denominator.
    pub variance: f64,
    pub std_dev: f64,
    /// Population analogues (n denominator), meaningful when the values are
    /// the whole population.
    pub population_variance: f64,
    pub population_std_dev: f64,
}

pub fn sample_mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
    }
    Ok(mean(values.iter().copied()).0)
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints { needed: 2, got: n });
    }
    let m = sample_mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    let variance = ss / (n - 1) as f64;
    let population_variance = ss / n as f64;
    Ok(SummaryStats {
        n,
        mean: m,
        variance,
        std_dev: variance.sqrt(),
        population_variance,
        population_std_dev: population_variance.sqrt(),
    })
}

/// `|estimated - measured| / measured * 100`.
pub fn relative_error(hr_estimated: f64, hr_measured: f64) -> Result<f64, StatsError> {
    if !(hr_measured > 0.0) {
        return Err(StatsError::NonPositiveMeasured(hr_measured));
    }
    if !hr_estimated.is_finite() || !hr_measured.is_finite() {
        return Err(StatsError::NonFinite);
    }
    Ok((hr_estimated - hr_measured).abs() / hr_measured * 100.0)
}

/// A relative error and its complementary accuracy, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub relative_error_pct: f64,
    pub accuracy_pct: f64,
}

impl ScoreRow {
    pub fn from_error(relative_error_pct: f64) -> Self {
        Self {
            relative_error_pct,
            accuracy_pct: 100.0 - relative_error_pct,
        }
    }

    /// Mean of per-prediction relative errors.
    pub fn from_errors(errors: &[f64]) -> Result<Self, StatsError> {
        Ok(Self::from_error(sample_mean(errors)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub within_1_sigma: f64,
    pub within_2_sigma: f64,
    pub within_3_sigma: f64,
}

/// Fractions of values inside mean +/- k sample standard deviations, k = 1, 2, 3.
pub fn normal_coverage(values: &[f64]) -> Result<Coverage, StatsError> {
    if values.len() < 30 {
        return Err(StatsError::TooFewPoints {
            needed: 30,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let s = summary_stats(values)?;
    if s.std_dev == 0.0 || values.iter().all(|&v| v == values[0]) {
        return Ok(Coverage {
            within_1_sigma: 1.0,
            within_2_sigma: 1.0,
            within_3_sigma: 1.0,
        });
    }
    let n = values.len() as f64;
    let frac = |k: f64| values.iter().filter(|&&v| (v - s.mean).abs() <= k * s.std_dev).count() as f64 / n;
    Ok(Coverage {
        within_1_sigma: frac(1.0),
        within_2_sigma: frac(2.0),
        within_3_sigma: frac(3.0),
    })
}
