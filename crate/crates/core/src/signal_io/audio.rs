use std::path::Path;

use super::{AudioClip, SignalIoError};

/// Full-scale divisor for 16-bit PCM: -32768 maps to exactly -1.0.
pub const AUDIO_FULL_SCALE: f64 = 32768.0;

fn map_hound(path: &Path, err: hound::Error) -> SignalIoError {
    match err {
        hound::Error::IoError(source) => SignalIoError::Io {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::Unsupported => SignalIoError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "not a linear PCM container".into(),
        },
        other => SignalIoError::CorruptHeader {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioClip, SignalIoError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(SignalIoError::MissingFile(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(SignalIoError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("{} channels, expected mono", spec.channels),
        });
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(SignalIoError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!(
                "{:?} {}-bit samples, expected 16-bit integer PCM",
                spec.sample_format, spec.bits_per_sample
            ),
        });
    }
    if spec.sample_rate == 0 {
        return Err(SignalIoError::CorruptHeader {
            path: path.to_path_buf(),
            reason: "zero sample rate".into(),
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / AUDIO_FULL_SCALE))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| map_hound(path, e))?;
    if samples.is_empty() {
        return Err(SignalIoError::EmptySignal(path.to_path_buf()));
    }
    AudioClip::new(
        samples,
        f64::from(spec.sample_rate),
        path.to_string_lossy().into_owned(),
    )
}

/// Quantizes a sample in [-1, 1] to the nearest 16-bit code, saturating.
pub(crate) fn quantize(sample: f64) -> i16 {
    (sample * AUDIO_FULL_SCALE)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

/// Writes `clip` as mono 16-bit PCM. The sample rate is rounded to the
/// nearest integer Hz since the container stores it that way.
pub fn write_audio(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), SignalIoError> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in clip.samples() {
        writer.write_sample(quantize(s)).map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}
