//! Mel-frequency cepstral front end and the per-utterance feature distance.
//!
//! Pipeline per frame: pre-emphasis, Hamming window, zero-padded FFT power
//! spectrum, triangular mel filterbank over [0, Nyquist], natural log with a
//! floor, and a type-II DCT. An utterance is summarised by its mean cepstral
//! vector; its feature distance is the Euclidean distance from that vector to
//! a per-subject enrollment reference.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_io::{AudioClip, EmotionLabel};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("clip has {samples} samples, shorter than one {frame}-sample frame")]
    ClipTooShort { samples: usize, frame: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("no embeddings to enroll")]
    EmptyEnrollment,
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("cepstral matrix has no frames")]
    EmptyMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub frame_length_s: f64,
    pub hop_length_s: f64,
    pub pre_emphasis: f64,
    pub n_mel_filters: usize,
    pub n_cepstra: usize,
    /// `None` picks the smallest power of two holding one frame.
    pub fft_size: Option<usize>,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_length_s: 0.025,
            hop_length_s: 0.010,
            pre_emphasis: 0.97,
            n_mel_filters: 26,
            n_cepstra: 13,
            fft_size: None,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidConfig(m.to_string()));
        if !(self.frame_length_s > 0.0 && self.hop_length_s > 0.0) {
            return bad("frame and hop lengths must be positive");
        }
        if self.hop_length_s > self.frame_length_s {
            return bad("hop must not exceed the frame length");
        }
        if self.n_mel_filters == 0 || self.n_cepstra == 0 {
            return bad("filter and cepstrum counts must be positive");
        }
        if self.n_cepstra > self.n_mel_filters {
            return bad("n_cepstra must not exceed n_mel_filters");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return bad("pre_emphasis must lie in [0, 1)");
        }
        if let Some(n) = self.fft_size {
            if !n.is_power_of_two() {
                return bad("fft_size must be a power of two");
            }
        }
        Ok(())
    }

    pub fn frame_samples(&self, rate: f64) -> usize {
        ((self.frame_length_s * rate).round() as usize).max(1)
    }

    pub fn hop_samples(&self, rate: f64) -> usize {
        ((self.hop_length_s * rate).round() as usize).max(1)
    }

    pub fn fft_len(&self, rate: f64) -> Result<usize, FeatureError> {
        let frame = self.frame_samples(rate);
        match self.fft_size {
            Some(n) if n < frame => Err(FeatureError::InvalidConfig(format!(
                "fft_size {n} shorter than the {frame}-sample frame"
            ))),
            Some(n) => Ok(n),
            None => Ok(frame.next_power_of_two()),
        }
    }
}

/// `1 + floor((n - frame) / hop)` for `n >= frame`, else zero.
pub fn frame_count(n: usize, frame: usize, hop: usize) -> usize {
    if n < frame || hop == 0 {
        0
    } else {
        1 + (n - frame) / hop
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Frame-by-cepstrum matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CepstraMatrix {
    data: Vec<f64>,
    n_cepstra: usize,
    config: FeatureConfig,
}

impl CepstraMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, config: FeatureConfig) -> Result<Self, FeatureError> {
        let n_cepstra = rows.first().map(Vec::len).ok_or(FeatureError::EmptyMatrix)?;
        let mut data = Vec::with_capacity(rows.len() * n_cepstra);
        for r in rows {
            if r.len() != n_cepstra {
                return Err(FeatureError::DimensionMismatch(r.len(), n_cepstra));
            }
            data.extend(r);
        }
        Ok(Self {
            data,
            n_cepstra,
            config,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.n_cepstra
    }

    pub fn n_cepstra(&self) -> usize {
        self.n_cepstra
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cepstra..(i + 1) * self.n_cepstra]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cepstra)
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    /// One frame per row, header `c0,c1,...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.n_cepstra).map(|i| format!("c{i}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for f in self.frames() {
            let row: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Triangular filters stored sparsely as (first bin, weights).
#[derive(Debug, Clone)]
struct MelFilterbank {
    filters: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    fn new(n_filters: usize, fft_len: usize, rate: f64) -> Self {
        let nyquist = rate / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
            .collect();
        let n_bins = fft_len / 2 + 1;
        let bin_hz = rate / fft_len as f64;
        let filters = (1..=n_filters)
            .map(|m| {
                let (lo, mid, hi) = (edges[m - 1], edges[m], edges[m + 1]);
                let weights: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f >= lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f <= hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                match (weights.first(), weights.last()) {
                    (Some(&(first, _)), Some(&(last, _))) => {
                        let mut dense = vec![0.0; last - first + 1];
                        for (k, w) in weights {
                            dense[k - first] = w;
                        }
                        (first, dense)
                    }
                    _ => (0, Vec::new()),
                }
            })
            .collect();
        Self { filters }
    }

    fn apply(&self, power: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.filters
                .iter()
                .map(|(start, w)| w.iter().zip(&power[*start..]).map(|(a, b)| a * b).sum::<f64>()),
        );
    }
}

pub(crate) fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Unnormalised type-II DCT, `2 * sum x[n] cos(pi k (2n+1) / 2N)`, first
/// `n_out` coefficients.
pub(crate) fn dct_ii(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            2.0 * x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Mel filterbank energies per frame, before the log. Exposed so the
/// power-spectrum path can be checked on its own.
pub fn filterbank_energies(clip: &AudioClip, config: &FeatureConfig) -> Result<Vec<Vec<f64>>, FeatureError> {
    config.validate()?;
    let rate = clip.sample_rate_hz();
    let x = clip.samples();
    let frame = config.frame_samples(rate);
    let hop = config.hop_samples(rate);
    if hop > frame {
        return Err(FeatureError::InvalidConfig("hop exceeds frame at this rate".into()));
    }
    let n_frames = frame_count(x.len(), frame, hop);
    if n_frames == 0 {
        return Err(FeatureError::ClipTooShort {
            samples: x.len(),
            frame,
        });
    }
    let fft_len = config.fft_len(rate)?;

    let alpha = config.pre_emphasis;
    let emphasized: Vec<f64> = std::iter::once(x[0])
        .chain(x.windows(2).map(|w| w[1] - alpha * w[0]))
        .collect();

    let window = hamming(frame);
    let bank = MelFilterbank::new(config.n_mel_filters, fft_len, rate);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_len);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut power = vec![0.0; fft_len / 2 + 1];
    let mut energies = Vec::with_capacity(n_frames);

    for t in 0..n_frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < frame {
                Complex::new(emphasized[start + i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        let mut e = Vec::with_capacity(config.n_mel_filters);
        bank.apply(&power, &mut e);
        energies.push(e);
    }
    Ok(energies)
}

pub fn mfcc(clip: &AudioClip, config: &FeatureConfig) -> Result<CepstraMatrix, FeatureError> {
    let energies = filterbank_energies(clip, config)?;
    let rows = energies
        .into_iter()
        .map(|e| {
            let logs: Vec<f64> = e.iter().map(|v| v.max(config.log_floor).ln()).collect();
            dct_ii(&logs, config.n_cepstra)
        })
        .collect();
    CepstraMatrix::from_rows(rows, config.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEmbedding {
    pub mean_cepstra: Vec<f64>,
}

impl UtteranceEmbedding {
    pub fn new(mean_cepstra: Vec<f64>) -> Self {
        Self { mean_cepstra }
    }

    pub fn len(&self) -> usize {
        self.mean_cepstra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_cepstra.is_empty()
    }
}

pub fn utterance_embedding(cepstra: &CepstraMatrix) -> UtteranceEmbedding {
    let t = cepstra.n_frames() as f64;
    let mut mean = vec![0.0; cepstra.n_cepstra()];
    for f in cepstra.frames() {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    UtteranceEmbedding::new(mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistance {
    pub value: f64,
    pub reference_id: String,
}

pub fn feature_distance(
    embedding: &UtteranceEmbedding,
    reference: &UtteranceEmbedding,
    reference_id: &str,
) -> Result<FeatureDistance, FeatureError> {
    if embedding.len() != reference.len() {
        return Err(FeatureError::DimensionMismatch(embedding.len(), reference.len()));
    }
    let value = embedding
        .mean_cepstra
        .iter()
        .zip(&reference.mean_cepstra)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(FeatureDistance {
        value,
        reference_id: reference_id.to_string(),
    })
}

/// Coordinate-wise mean of the enrollment embeddings.
pub fn subject_reference(embeddings: &[UtteranceEmbedding]) -> Result<UtteranceEmbedding, FeatureError> {
    let first = embeddings.first().ok_or(FeatureError::EmptyEnrollment)?;
    let d = first.len();
    let mut mean = vec![0.0; d];
    for e in embeddings {
        if e.len() != d {
            return Err(FeatureError::DimensionMismatch(e.len(), d));
        }
        for (m, v) in mean.iter_mut().zip(&e.mean_cepstra) {
            *m += v;
        }
    }
    let n = embeddings.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(UtteranceEmbedding::new(mean))
}

/// Reference from the neutral takes, or from every take when the subject has
/// no neutral recordings.
pub fn enrollment_reference(takes: &[(EmotionLabel, UtteranceEmbedding)]) -> Result<UtteranceEmbedding, FeatureError> {
    let neutral: Vec<UtteranceEmbedding> = takes
        .iter()
        .filter(|(e, _)| *e == EmotionLabel::Neutral)
        .map(|(_, v)| v.clone())
        .collect();
    if neutral.is_empty() {
        let all: Vec<UtteranceEmbedding> = takes.iter().map(|(_, v)| v.clone()).collect();
        subject_reference(&all)
    } else {
        subject_reference(&neutral)
    }
}
