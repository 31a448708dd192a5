//! Synthetic corpus with planted ground truth.
//!
//! Each subject gets a harmonic "voice" (pitch plus three formants); each
//! emotion alters pitch, formant positions and spectral tilt. A take's gain
//! is tuned in closed loop until its feature distance to the subject's base
//! voice reaches a drawn target. The heart rate is then planted on the
//! subject's line through the take's measured feature distance and rendered
//! as an ECG template train.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, PipelineError};
use crate::features::{
    enrollment_reference, feature_distance, mfcc, utterance_embedding, FeatureConfig, UtteranceEmbedding,
};
use crate::signal_io::audio::quantize;
use crate::signal_io::{
    write_ecg, write_manifest, AudioClip, DatasetManifest, EcgRecord, EmotionLabel, ManifestEntry, AUDIO_FULL_SCALE,
};

const BASE_RMS: f64 = 0.03;
const MAX_ITERATIONS: usize = 10;
/// Relative miss at which the gain search stops early.
const INNER_TOLERANCE: f64 = 0.002;
const ECG_MARGIN_S: f64 = 0.3;
/// Planted heart rates must stay inside this band.
const HR_BAND: (f64, f64) = (30.0, 220.0);
const INTERCEPT_BAND: (f64, f64) = (60.0, 110.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedLine {
    pub subject_id: String,
    pub emotion: EmotionLabel,
    pub beta0: f64,
    pub beta1: f64,
}

/// How planted (intercept, slope) pairs are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinePlan {
    /// Independent uniform draws per (subject, emotion) cell.
    Random { intercept: [f64; 2], slope: [f64; 2] },
    /// One intercept per subject; the slope depends only on the emotion
    /// (joy, neutral, anger).
    EmotionDependent { intercept: [f64; 2], slopes: [f64; 3] },
    /// One line per subject shared by all emotions.
    Homogeneous { intercept: [f64; 2], slope: [f64; 2] },
    /// Every cell listed.
    Explicit { lines: Vec<PlantedLine> },
}

impl Default for LinePlan {
    fn default() -> Self {
        LinePlan::Random {
            intercept: [60.0, 110.0],
            slope: [0.08, 0.2],
        }
    }
}

impl LinePlan {
    pub fn emotion_dependent() -> Self {
        LinePlan::EmotionDependent {
            intercept: [70.0, 100.0],
            slopes: [0.05, 0.09, 0.13],
        }
    }

    pub fn homogeneous() -> Self {
        LinePlan::Homogeneous {
            intercept: [70.0, 100.0],
            slope: [0.08, 0.16],
        }
    }

    fn line(&self, seed: u64, subject: &str, emotion: EmotionLabel) -> Option<(f64, f64)> {
        let draw = |key: String, r: [f64; 2]| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &key));
            if r[0] == r[1] {
                r[0]
            } else {
                rng.gen_range(r[0]..r[1])
            }
        };
        match self {
            LinePlan::Random { intercept, slope } => Some((
                draw(format!("b0/{subject}/{emotion}"), *intercept),
                draw(format!("b1/{subject}/{emotion}"), *slope),
            )),
            LinePlan::EmotionDependent { intercept, slopes } => {
                Some((draw(format!("b0/{subject}"), *intercept), slopes[emotion.index()]))
            }
            LinePlan::Homogeneous { intercept, slope } => Some((
                draw(format!("b0/{subject}"), *intercept),
                draw(format!("b1/{subject}"), *slope),
            )),
            LinePlan::Explicit { lines } => lines
                .iter()
                .find(|l| l.subject_id == subject && l.emotion == emotion)
                .map(|l| (l.beta0, l.beta1)),
        }
    }

    /// (intercept range, slope range) the plan can produce.
    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            v.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], x| [lo.min(x), hi.max(x)])
        };
        match self {
            LinePlan::Random { intercept, slope } | LinePlan::Homogeneous { intercept, slope } => (*intercept, *slope),
            LinePlan::EmotionDependent { intercept, slopes } => (*intercept, span(&mut slopes.iter().copied())),
            LinePlan::Explicit { lines } => (
                span(&mut lines.iter().map(|l| l.beta0)),
                span(&mut lines.iter().map(|l| l.beta1)),
            ),
        }
    }
}

/// Target feature-distance ranges per emotion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdRanges {
    pub joy: [f64; 2],
    pub neutral: [f64; 2],
    pub anger: [f64; 2],
}

impl Default for FdRanges {
    fn default() -> Self {
        Self {
            joy: [50.0, 120.0],
            neutral: [20.0, 80.0],
            anger: [70.0, 140.0],
        }
    }
}

impl FdRanges {
    pub fn get(&self, e: EmotionLabel) -> [f64; 2] {
        match e {
            EmotionLabel::Joy => self.joy,
            EmotionLabel::Neutral => self.neutral,
            EmotionLabel::Anger => self.anger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub takes_per_emotion: usize,
    pub lines: LinePlan,
    pub noise_std_bpm: f64,
    pub fd_ranges: FdRanges,
    pub audio_rate_hz: f64,
    pub utterance_s: f64,
    /// White noise added to each utterance, relative to the voice rms.
    pub voice_noise_fraction: f64,
    pub ecg_rate_hz: f64,
    pub ecg_duration_s: f64,
    pub ecg_noise_mv: f64,
    /// Largest accepted relative miss of the feature-distance target.
    pub fd_tolerance: f64,
    /// Must match the configuration used for extraction.
    pub features: FeatureConfig,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_subjects: 15,
            takes_per_emotion: 90,
            lines: LinePlan::default(),
            noise_std_bpm: 3.0,
            fd_ranges: FdRanges::default(),
            audio_rate_hz: 16000.0,
            utterance_s: 0.5,
            voice_noise_fraction: 0.02,
            ecg_rate_hz: 500.0,
            ecg_duration_s: 6.0,
            ecg_noise_mv: 0.0,
            fd_tolerance: 0.05,
            features: FeatureConfig::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn subject_ids(&self) -> Vec<String> {
        (1..=self.n_subjects).map(|i| format!("s{i:02}")).collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Validation(m));
        if self.n_subjects == 0 || self.takes_per_emotion == 0 {
            return bad("n_subjects and takes_per_emotion must be positive".into());
        }
        if !(self.noise_std_bpm >= 0.0 && self.ecg_noise_mv >= 0.0 && self.voice_noise_fraction >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        if !(self.audio_rate_hz >= 8000.0 && self.ecg_rate_hz >= 100.0) {
            return bad("audio rate must be at least 8 kHz and ECG rate at least 100 Hz".into());
        }
        if !(self.ecg_duration_s >= 3.0) {
            return bad("ecg_duration_s must be at least 3 s".into());
        }
        if !(self.fd_tolerance > 0.0 && self.fd_tolerance < 1.0) {
            return bad("fd_tolerance must lie in (0, 1)".into());
        }
        self.features.validate()?;
        let frame = self.features.frame_samples(self.audio_rate_hz);
        if ((self.utterance_s * self.audio_rate_hz) as usize) < frame {
            return bad("utterance shorter than one analysis frame".into());
        }
        let mut fd_hi = 0.0f64;
        let mut fd_lo = f64::INFINITY;
        for e in EmotionLabel::ALL {
            let [lo, hi] = self.fd_ranges.get(e);
            if !(lo > 0.0 && hi > lo) {
                return bad(format!("{e} feature-distance range must satisfy 0 < lo < hi"));
            }
            fd_lo = fd_lo.min(lo);
            fd_hi = fd_hi.max(hi);
        }
        if let LinePlan::Explicit { lines } = &self.lines {
            for s in self.subject_ids() {
                for e in EmotionLabel::ALL {
                    if !lines.iter().any(|l| l.subject_id == s && l.emotion == e) {
                        return bad(format!("explicit plan has no line for {s}/{e}"));
                    }
                }
            }
        }
        let ([b0_lo, b0_hi], [b1_lo, b1_hi]) = self.lines.bounds();
        if !(b0_lo >= INTERCEPT_BAND.0 && b0_hi <= INTERCEPT_BAND.1 && b0_lo <= b0_hi && b1_lo <= b1_hi) {
            return bad(format!(
                "planted intercepts must lie in [{}, {}] bpm",
                INTERCEPT_BAND.0, INTERCEPT_BAND.1
            ));
        }
        // Extremes of the noiseless line over the target range, with a
        // margin for the measured distance overshooting its target.
        let corners = [
            b0_lo + b1_lo.min(0.0) * fd_hi * 1.2 + b1_lo.max(0.0) * fd_lo * 0.8,
            b0_hi + b1_hi.max(0.0) * fd_hi * 1.2 + b1_hi.min(0.0) * fd_lo * 0.8,
        ];
        if corners.iter().any(|hr| !(HR_BAND.0..=HR_BAND.1).contains(hr)) {
            return bad(format!(
                "planted heart rates {corners:?} leave [{}, {}] bpm",
                HR_BAND.0, HR_BAND.1
            ));
        }
        Ok(())
    }
}

/// Ground truth for one take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub subject_id: String,
    pub emotion: EmotionLabel,
    pub take_index: u32,
    pub planted_beta0: f64,
    pub planted_beta1: f64,
    pub target_fd: f64,
    /// Distance of the generated audio to the subject's enrollment
    /// reference, computed exactly as extraction does.
    pub feature_distance: f64,
    pub heart_rate_bpm: f64,
}

pub fn write_ledger(entries: &[LedgerEntry], path: impl AsRef<Path>) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let malformed = |e: csv::Error| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(malformed)?;
    for e in entries {
        w.serialize(e).map_err(malformed)?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

pub fn read_ledger(path: impl AsRef<Path>) -> Result<Vec<LedgerEntry>, PipelineError> {
    let path = path.as_ref();
    let malformed = |e: csv::Error| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    csv::Reader::from_path(path)
        .map_err(malformed)?
        .deserialize()
        .map(|r| r.map_err(malformed))
        .collect()
}

/// Evenly spaced beat times from `first_at` up to `duration_s - first_at`.
pub fn beat_times_constant(bpm: f64, duration_s: f64, first_at: f64) -> Vec<f64> {
    let rr = 60.0 / bpm;
    let mut beats = Vec::new();
    let mut k = 0.0;
    loop {
        let t = first_at + k * rr;
        if t > duration_s - first_at {
            return beats;
        }
        beats.push(t);
        k += 1.0;
    }
}

/// Beat times for an instantaneous rate `mean + amp * sin(2 pi f t)` bpm:
/// a beat falls wherever the integrated rate crosses a whole number.
pub fn beat_times_modulated(mean_bpm: f64, amp_bpm: f64, mod_hz: f64, duration_s: f64, first_at: f64) -> Vec<f64> {
    let phase = |t: f64| {
        let dt = t - first_at;
        let osc = if mod_hz > 0.0 {
            amp_bpm * ((2.0 * PI * mod_hz * first_at).cos() - (2.0 * PI * mod_hz * t).cos()) / (2.0 * PI * mod_hz)
        } else {
            0.0
        };
        (mean_bpm * dt + osc) / 60.0
    };
    let end = duration_s - first_at;
    let mut beats = vec![first_at];
    let mut k = 1.0;
    let mut lo = first_at;
    loop {
        // The phase is increasing while the rate stays positive; bisect
        // for the next crossing.
        let mut hi = lo + 60.0 / (mean_bpm - amp_bpm.abs()).max(1.0);
        if phase(hi) < k {
            return beats;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if phase(mid) < k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi > end {
            return beats;
        }
        beats.push(hi);
        lo = hi;
        k += 1.0;
    }
}

/// (offset s, amplitude mV, width s) of the P, Q, R, S and T waves.
const ECG_WAVES: [(f64, f64, f64); 5] = [
    (-0.20, 0.15, 0.025),
    (-0.03, -0.10, 0.008),
    (0.0, 1.0, 0.010),
    (0.03, -0.20, 0.008),
    (0.28, 0.30, 0.040),
];

/// Sum of Gaussian P-QRS-T complexes centred on each beat, in mV.
pub fn synthesize_ecg(beats: &[f64], duration_s: f64, rate_hz: f64) -> Vec<f64> {
    let n = (duration_s * rate_hz).round() as usize;
    let mut x = vec![0.0; n];
    for &b in beats {
        for &(off, amp, w) in &ECG_WAVES {
            let c = b + off;
            let lo = (((c - 5.0 * w) * rate_hz).floor().max(0.0)) as usize;
            let hi = (((c + 5.0 * w) * rate_hz).ceil().max(0.0) as usize).min(n);
            for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
                let z = (i as f64 / rate_hz - c) / w;
                *v += amp * (-0.5 * z * z).exp();
            }
        }
    }
    x
}

struct Voice {
    f0_hz: f64,
    formants: [(f64, f64); 3],
}

impl Voice {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            f0_hz: rng.gen_range(100.0..220.0),
            formants: [
                (rng.gen_range(500.0..800.0), rng.gen_range(80.0..120.0)),
                (rng.gen_range(1200.0..2000.0), rng.gen_range(100.0..160.0)),
                (rng.gen_range(2400.0..3000.0), rng.gen_range(140.0..220.0)),
            ],
        }
    }
}

/// (pitch scale, formant scale, spectral tilt exponent).
fn emotion_style(e: EmotionLabel) -> (f64, f64, f64) {
    match e {
        EmotionLabel::Neutral => (1.0, 1.0, 1.0),
        EmotionLabel::Joy => (1.2, 1.04, 0.85),
        EmotionLabel::Anger => (1.1, 1.08, 0.7),
    }
}

/// Unit-gain utterance at `BASE_RMS`: one pitch period of harmonics with
/// Schroeder phases, tiled, plus white noise when `rng` is given.
fn utterance(
    voice: &Voice,
    emotion: EmotionLabel,
    period_jitter: i64,
    spec: &SynthSpec,
    rng: Option<&mut ChaCha8Rng>,
) -> Vec<f64> {
    let rate = spec.audio_rate_hz;
    let n = (spec.utterance_s * rate).round() as usize;
    let (pitch, formant, tilt) = emotion_style(emotion);
    let period = ((rate / (voice.f0_hz * pitch)).round() as i64 + period_jitter).max(8) as usize;
    let f0 = rate / period as f64;
    let n_harm = ((0.45 * rate / f0).floor() as usize).max(1);
    let amp = |f: f64| {
        let env: f64 = voice
            .formants
            .iter()
            .map(|&(c, bw)| {
                let z = (f - c * formant) / bw;
                (-0.5 * z * z).exp()
            })
            .sum();
        (env + 0.05) * (1.0 + f / 500.0).powf(-tilt)
    };
    let mut cycle = vec![0.0; period];
    for k in 1..=n_harm {
        let a = amp(k as f64 * f0);
        let phi = PI * (k * k) as f64 / n_harm as f64;
        for (i, c) in cycle.iter_mut().enumerate() {
            *c += a * (2.0 * PI * (k * i) as f64 / period as f64 + phi).cos();
        }
    }
    let rms = (cycle.iter().map(|v| v * v).sum::<f64>() / period as f64).sqrt();
    let mut x: Vec<f64> = (0..n).map(|i| cycle[i % period] * BASE_RMS / rms).collect();
    if let Some(rng) = rng {
        let s = spec.voice_noise_fraction * BASE_RMS;
        for v in &mut x {
            let z: f64 = StandardNormal.sample(rng);
            *v += s * z;
        }
    }
    x
}

/// Quantized 16-bit rendition of `wave * exp(log_gain)` and its embedding.
fn render(
    wave: &[f64],
    log_gain: f64,
    spec: &SynthSpec,
    id: &str,
) -> Result<(Vec<f64>, UtteranceEmbedding), PipelineError> {
    let g = log_gain.exp();
    let samples: Vec<f64> = wave
        .iter()
        .map(|v| f64::from(quantize(v * g)) / AUDIO_FULL_SCALE)
        .collect();
    let clip = AudioClip::new(samples, spec.audio_rate_hz, id)?;
    let emb = utterance_embedding(&mfcc(&clip, &spec.features)?);
    Ok((clip.samples().to_vec(), emb))
}

fn distance(a: &UtteranceEmbedding, b: &UtteranceEmbedding) -> Result<f64, PipelineError> {
    Ok(feature_distance(a, b, "")?.value)
}

/// Searches the log-gain, on the side given by `sign`, at which the take's
/// distance to `base` equals `target`. A gain change of `u` moves c0 by
/// about `4 * n_mel * u`, which seeds the secant iteration.
fn tune_gain(
    wave: &[f64],
    base: &UtteranceEmbedding,
    target: f64,
    sign: f64,
    spec: &SynthSpec,
    id: &str,
) -> Result<(Vec<f64>, UtteranceEmbedding), PipelineError> {
    let slope = 4.0 * spec.features.n_mel_filters as f64;
    let (mut best, mut best_miss) = (None, f64::INFINITY);
    let mut try_u = |u: f64| -> Result<f64, PipelineError> {
        let (s, e) = render(wave, u, spec, id)?;
        let d = distance(&e, base)?;
        let miss = (d - target).abs() / target;
        if miss < best_miss {
            best_miss = miss;
            best = Some((s, e));
        }
        Ok(d)
    };
    let d0 = try_u(0.0)?;
    let mut u_prev = 0.0;
    let mut d_prev = d0;
    let mut u = sign * (target * target - d0 * d0).max(0.0).sqrt() / slope;
    for _ in 1..MAX_ITERATIONS {
        let d = try_u(u)?;
        if (d - target).abs() / target <= INNER_TOLERANCE {
            break;
        }
        let secant = (d - d_prev) / (u - u_prev);
        let step_slope = if secant.is_finite() && secant * sign > 0.1 * slope {
            secant
        } else {
            sign * slope
        };
        u_prev = u;
        d_prev = d;
        u += (target - d) / step_slope;
        if !u.is_finite() || u.abs() > 6.0 {
            break;
        }
    }
    if best_miss > spec.fd_tolerance {
        return Err(PipelineError::ConvergenceFailure(format!(
            "{id}: feature distance missed target {target:.3} by {:.1}%",
            100.0 * best_miss
        )));
    }
    Ok(best.expect("at least one rendering"))
}

struct Take {
    emotion: EmotionLabel,
    take_index: u32,
    target_fd: f64,
    samples: Vec<f64>,
    embedding: UtteranceEmbedding,
}

fn take_key(subject: &str, e: EmotionLabel, t: usize) -> String {
    format!("{subject}/{e}/{t}")
}

fn generate_subject(
    spec: &SynthSpec,
    subject: &str,
    out_dir: &Path,
) -> Result<Vec<(ManifestEntry, LedgerEntry)>, PipelineError> {
    let seed = spec.seed;
    let voice = Voice::draw(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &format!("voice/{subject}"),
    )));
    let (_, base) = render(
        &utterance(&voice, EmotionLabel::Neutral, 0, spec, None),
        0.0,
        spec,
        subject,
    )?;

    let mut jobs = Vec::new();
    for e in EmotionLabel::ALL {
        for t in 0..spec.takes_per_emotion {
            jobs.push((e, t));
        }
    }
    let takes = jobs
        .into_par_iter()
        .map(|(e, t)| {
            // Neutral takes come in pairs sharing one target on opposite
            // sides of the base voice, so their mean stays near it.
            let (target_slot, sign) = match e {
                EmotionLabel::Neutral => (t / 2, if t % 2 == 0 { 1.0 } else { -1.0 }),
                _ => (t, 1.0),
            };
            let [lo, hi] = spec.fd_ranges.get(e);
            let mut trng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &format!("target/{}", take_key(subject, e, target_slot)),
            ));
            let target = trng.gen_range(lo..hi);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("audio/{}", take_key(subject, e, t))));
            let jitter = rng.gen_range(-1..=1);
            let wave = utterance(&voice, e, jitter, spec, Some(&mut rng));
            let id = take_key(subject, e, t);
            let (samples, embedding) = tune_gain(&wave, &base, target, sign, spec, &id)?;
            Ok(Take {
                emotion: e,
                take_index: t as u32,
                target_fd: target,
                samples,
                embedding,
            })
        })
        .collect::<Result<Vec<Take>, PipelineError>>()?;

    let enrollment: Vec<(EmotionLabel, UtteranceEmbedding)> =
        takes.iter().map(|t| (t.emotion, t.embedding.clone())).collect();
    let reference = enrollment_reference(&enrollment)?;

    let audio_dir = out_dir.join("audio");
    let ecg_dir = out_dir.join("ecg");
    takes
        .into_par_iter()
        .map(|take| {
            let (b0, b1) = spec
                .lines
                .line(seed, subject, take.emotion)
                .ok_or_else(|| PipelineError::Validation(format!("no planted line for {subject}/{}", take.emotion)))?;
            let fd = distance(&take.embedding, &reference)?;
            let key = take_key(subject, take.emotion, take.take_index as usize);
            let mut hr_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("hr/{key}")));
            let z: f64 = StandardNormal.sample(&mut hr_rng);
            let hr = b0 + b1 * fd + spec.noise_std_bpm * z;
            if !(HR_BAND.0..=HR_BAND.1).contains(&hr) {
                return Err(PipelineError::Validation(format!(
                    "{key}: planted heart rate {hr:.1} bpm outside [{}, {}]",
                    HR_BAND.0, HR_BAND.1
                )));
            }

            let stem = format!("{subject}_{}_{:03}", take.emotion, take.take_index);
            let audio_path = audio_dir.join(format!("{stem}.wav"));
            let clip = AudioClip::new(take.samples, spec.audio_rate_hz, &stem)?;
            crate::signal_io::write_audio(&clip, &audio_path)?;

            let beats = beat_times_constant(hr, spec.ecg_duration_s, ECG_MARGIN_S);
            let mut ecg = synthesize_ecg(&beats, spec.ecg_duration_s, spec.ecg_rate_hz);
            let mut ecg_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("ecg/{key}")));
            for v in &mut ecg {
                let z: f64 = StandardNormal.sample(&mut ecg_rng);
                *v = ((*v + spec.ecg_noise_mv * z) * 1e4).round() / 1e4;
            }
            let ecg_path = ecg_dir.join(format!("{stem}.csv"));
            write_ecg(&EcgRecord::new(ecg, spec.ecg_rate_hz, &stem)?, &ecg_path)?;

            Ok((
                ManifestEntry {
                    subject_id: subject.to_string(),
                    emotion: take.emotion,
                    take_index: take.take_index,
                    audio_path,
                    ecg_path,
                },
                LedgerEntry {
                    subject_id: subject.to_string(),
                    emotion: take.emotion,
                    take_index: take.take_index,
                    planted_beta0: b0,
                    planted_beta1: b1,
                    target_fd: take.target_fd,
                    feature_distance: fd,
                    heart_rate_bpm: hr,
                },
            ))
        })
        .collect()
}

/// Writes `audio/*.wav`, `ecg/*.csv`, `manifest.csv` and `ledger.csv`
/// under `out_dir`. Output is a pure function of the spec.
pub fn generate_synthetic_corpus(
    spec: &SynthSpec,
    out_dir: impl AsRef<Path>,
) -> Result<(DatasetManifest, Vec<LedgerEntry>), PipelineError> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    for d in [out_dir.to_path_buf(), out_dir.join("audio"), out_dir.join("ecg")] {
        std::fs::create_dir_all(&d).map_err(|e| PipelineError::io(&d, e))?;
    }
    let per_subject = spec
        .subject_ids()
        .par_iter()
        .map(|s| generate_subject(spec, s, out_dir))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let (entries, ledger): (Vec<ManifestEntry>, Vec<LedgerEntry>) = per_subject.into_iter().flatten().unzip();
    let manifest = DatasetManifest::new(entries)?;
    write_manifest(&manifest, manifest_path(out_dir))?;
    write_ledger(&ledger, out_dir.join("ledger.csv"))?;
    Ok((manifest, ledger))
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.csv")
}
