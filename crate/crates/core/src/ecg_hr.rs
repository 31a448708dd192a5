//! R-peak detection and beats-per-minute estimation.
//!
//! The detector follows the usual QRS envelope chain: band-pass (5-15 Hz),
//! five-point derivative, squaring and a 150 ms moving integration. Every
//! stage is zero-phase, so envelope maxima line up with the underlying
//! complexes without a group-delay correction. Peaks are local maxima of the
//! envelope above an adaptive threshold proportional to the running envelope
//! level, with a refractory floor between accepted peaks.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_io::EcgRecord;

/// Width of one small square on standard ECG paper at 25 mm/s.
pub const SMALL_SQUARE_S: f64 = 0.04;

#[derive(Debug, Error, PartialEq)]
pub enum EcgError {
    #[error("record is {duration_s:.3} s long, at least {min_s} s required")]
    SignalTooShort { duration_s: f64, min_s: f64 },
    #[error("no R-peaks found")]
    NoPeaksFound,
    #[error("{found} R-peak(s) found, at least 2 needed for a rate")]
    InsufficientPeaks { found: usize },
    #[error("RR interval must be positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("invalid peak configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid peak series: {0}")]
    InvalidPeaks(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub integration_window_s: f64,
    pub refractory_s: f64,
    /// Envelope maxima must exceed this fraction of the local envelope level.
    pub threshold_fraction: f64,
    /// Span of the centred window the local envelope level is taken over.
    pub threshold_window_s: f64,
    /// Maxima below this fraction of the global envelope peak are ignored.
    pub global_floor_fraction: f64,
    pub min_duration_s: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 5.0,
            band_high_hz: 15.0,
            integration_window_s: 0.150,
            refractory_s: 0.2,
            threshold_fraction: 0.5,
            threshold_window_s: 2.0,
            global_floor_fraction: 0.1,
            min_duration_s: 2.0,
        }
    }
}

impl PeakConfig {
    pub fn validate(&self) -> Result<(), EcgError> {
        let bad = |msg: &str| Err(EcgError::InvalidConfig(msg.to_string()));
        if !(self.band_low_hz > 0.0 && self.band_high_hz > self.band_low_hz) {
            return bad("band edges must satisfy 0 < low < high");
        }
        if !(self.integration_window_s > 0.0 && self.threshold_window_s > 0.0) {
            return bad("window lengths must be positive");
        }
        if !(self.refractory_s > 0.0) {
            return bad("refractory period must be positive");
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return bad("threshold fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.global_floor_fraction) {
            return bad("global floor fraction must lie in [0, 1)");
        }
        if !(self.min_duration_s >= 0.0) {
            return bad("minimum duration must be non-negative");
        }
        Ok(())
    }
}

/// Detected R-peak sample indices, strictly increasing and at least one
/// refractory period apart.
#[derive(Debug, Clone, PartialEq)]
pub struct RPeakSeries {
    peak_indices: Vec<usize>,
    sample_rate_hz: f64,
}

impl RPeakSeries {
    pub fn new(peak_indices: Vec<usize>, sample_rate_hz: f64, refractory_s: f64) -> Result<Self, EcgError> {
        if !(sample_rate_hz > 0.0) {
            return Err(EcgError::InvalidPeaks("sample rate must be positive".into()));
        }
        let min_gap = refractory_s * sample_rate_hz;
        for w in peak_indices.windows(2) {
            if w[1] <= w[0] {
                return Err(EcgError::InvalidPeaks("indices must be strictly increasing".into()));
            }
            if ((w[1] - w[0]) as f64) < min_gap - 1e-9 {
                return Err(EcgError::InvalidPeaks(format!(
                    "peaks {} and {} are closer than the refractory floor",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            peak_indices,
            sample_rate_hz,
        })
    }

    pub fn peak_indices(&self) -> &[usize] {
        &self.peak_indices
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.peak_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_indices.is_empty()
    }

    pub fn rr_intervals_s(&self) -> impl Iterator<Item = f64> + '_ {
        self.peak_indices
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / self.sample_rate_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeartRate {
    pub bpm: f64,
    pub n_intervals: usize,
}

/// The 1500 rule: count 0.04 s small squares in the RR interval and divide
/// 1500 by the count.
pub fn heart_rate_1500(rr_interval_s: f64) -> Result<f64, EcgError> {
    if !(rr_interval_s > 0.0) || !rr_interval_s.is_finite() {
        return Err(EcgError::NonPositiveInterval(rr_interval_s));
    }
    let small_squares = rr_interval_s / SMALL_SQUARE_S;
    Ok(1500.0 / small_squares)
}

pub fn detect_r_peaks(record: &EcgRecord, config: &PeakConfig) -> Result<RPeakSeries, EcgError> {
    config.validate()?;
    let rate = record.sample_rate_hz();
    if record.duration_s() < config.min_duration_s {
        return Err(EcgError::SignalTooShort {
            duration_s: record.duration_s(),
            min_s: config.min_duration_s,
        });
    }
    let env = qrs_envelope(record.samples(), rate, config);
    let global_max = env.iter().copied().fold(0.0, f64::max);
    if !(global_max > 0.0) {
        return Err(EcgError::NoPeaksFound);
    }
    let floor = config.global_floor_fraction * global_max;
    let level = running_max(&env, odd_window(config.threshold_window_s * rate));

    let mut candidates: Vec<usize> = (1..env.len().saturating_sub(1))
        .filter(|&i| {
            let v = env[i];
            v > env[i - 1] && v >= env[i + 1] && v > floor && v > config.threshold_fraction * level[i]
        })
        .collect();
    if candidates.is_empty() {
        return Err(EcgError::NoPeaksFound);
    }

    // Strongest first; equal heights resolve to the earlier index.
    candidates.sort_by(|&a, &b| env[b].total_cmp(&env[a]).then(a.cmp(&b)));
    let min_gap = (config.refractory_s * rate).ceil() as usize;
    let mut accepted: Vec<usize> = Vec::new();
    for c in candidates {
        let pos = accepted.partition_point(|&p| p < c);
        let clear_left = pos == 0 || c - accepted[pos - 1] >= min_gap;
        let clear_right = pos == accepted.len() || accepted[pos] - c >= min_gap;
        if clear_left && clear_right {
            accepted.insert(pos, c);
        }
    }
    RPeakSeries::new(accepted, rate, config.refractory_s)
}

pub fn extract_heart_rate(record: &EcgRecord, config: &PeakConfig) -> Result<HeartRate, EcgError> {
    let peaks = detect_r_peaks(record, config)?;
    heart_rate_from_peaks(&peaks)
}

/// Mean of the per-interval 1500-rule rates over all consecutive peaks.
pub fn heart_rate_from_peaks(peaks: &RPeakSeries) -> Result<HeartRate, EcgError> {
    if peaks.len() < 2 {
        return Err(EcgError::InsufficientPeaks { found: peaks.len() });
    }
    let mut sum = 0.0;
    let mut n = 0;
    for rr in peaks.rr_intervals_s() {
        sum += heart_rate_1500(rr)?;
        n += 1;
    }
    Ok(HeartRate {
        bpm: sum / n as f64,
        n_intervals: n,
    })
}

fn odd_window(samples: f64) -> usize {
    let w = samples.round().max(1.0) as usize;
    w | 1
}

/// Band-pass, differentiate, square and integrate.
pub(crate) fn qrs_envelope(samples: &[f64], rate: f64, config: &PeakConfig) -> Vec<f64> {
    let mut x = samples.to_vec();
    let hp = Biquad::highpass(config.band_low_hz, rate);
    let lp = Biquad::lowpass(config.band_high_hz, rate);
    filtfilt(&hp, &mut x);
    filtfilt(&lp, &mut x);
    let deriv = five_point_derivative(&x, rate);
    let squared: Vec<f64> = deriv.iter().map(|d| d * d).collect();
    centred_moving_average(&squared, odd_window(config.integration_window_s * rate))
}

/// Second-order section, direct form I, coefficients from the audio EQ
/// cookbook with Butterworth Q.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, rate: f64) -> Self {
        let w0 = 2.0 * PI * (cutoff_hz / rate).min(0.49);
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * FRAC_1_SQRT_2);
        let a0 = 1.0 + alpha;
        let b1 = (1.0 - cos) / a0;
        Self {
            b: [b1 / 2.0, b1, b1 / 2.0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn highpass(cutoff_hz: f64, rate: f64) -> Self {
        let w0 = 2.0 * PI * (cutoff_hz / rate).min(0.49);
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * FRAC_1_SQRT_2);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 + cos) / (2.0 * a0);
        Self {
            b: [b0, -2.0 * b0, b0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn run(&self, x: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in x.iter_mut() {
            let x0 = *v;
            let y0 = self.b[0] * x0 + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

/// Forward then backward pass: zero phase, squared magnitude response.
fn filtfilt(section: &Biquad, x: &mut [f64]) {
    section.run(x);
    x.reverse();
    section.run(x);
    x.reverse();
}

fn five_point_derivative(x: &[f64], rate: f64) -> Vec<f64> {
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= x.len() {
            0.0
        } else {
            x[i as usize]
        }
    };
    (0..x.len() as isize)
        .map(|i| (2.0 * at(i + 1) + at(i + 2) - 2.0 * at(i - 1) - at(i - 2)) * rate / 8.0)
        .collect()
}

fn centred_moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            // Clamp tiny negatives from cancellation in the prefix sums.
            ((prefix[hi] - prefix[lo]) / window as f64).max(0.0)
        })
        .collect()
}

/// Maximum over a centred window of `window` samples, O(n) via a monotone deque.
fn running_max(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut out = Vec::with_capacity(x.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..x.len() {
        let hi = (i + half).min(x.len() - 1);
        while next <= hi {
            while deque.back().is_some_and(|&j| x[j] <= x[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(half);
        while deque.front().is_some_and(|&j| j < lo) {
            deque.pop_front();
        }
        out.push(x[*deque.front().unwrap()]);
    }
    out
}
