use std::fmt::Write as _;
use std::path::Path;

use super::{EcgRecord, SignalIoError};

const RATE_PREFIX: &str = "# rate_hz=";

fn corrupt(path: &Path, line: usize, reason: impl Into<String>) -> SignalIoError {
    SignalIoError::CorruptRow {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64, SignalIoError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| corrupt(path, line, format!("not a number: {:?}", field.trim())))?;
    if !v.is_finite() {
        return Err(corrupt(path, line, "non-finite value"));
    }
    Ok(v)
}

/// Loads an ECG record from either of the two CSV layouts:
///
/// * header `time_s,mv` followed by `t,value` rows; the rate is inferred
///   from the timestamps, which must be uniform to within a quarter sample;
/// * a `# rate_hz=<R>` line followed by one value per line.
pub fn load_ecg(path: impl AsRef<Path>) -> Result<EcgRecord, SignalIoError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(SignalIoError::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| SignalIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let Some((header_line, header)) = lines.next() else {
        return Err(SignalIoError::EmptySignal(path.to_path_buf()));
    };

    let (samples, rate) = if let Some(rate) = header.strip_prefix(RATE_PREFIX) {
        let rate: f64 = rate.trim().parse().map_err(|_| SignalIoError::CorruptHeader {
            path: path.to_path_buf(),
            reason: format!("bad rate declaration {header:?}"),
        })?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SignalIoError::CorruptHeader {
                path: path.to_path_buf(),
                reason: format!("non-positive rate {rate}"),
            });
        }
        let samples = lines
            .map(|(n, l)| parse_value(path, n, l))
            .collect::<Result<Vec<_>, _>>()?;
        (samples, rate)
    } else if header.replace(' ', "") == "time_s,mv" {
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (n, l) in lines {
            let mut fields = l.split(',');
            let (Some(t), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(corrupt(path, n, "expected two columns"));
            };
            times.push(parse_value(path, n, t)?);
            samples.push(parse_value(path, n, v)?);
        }
        if samples.is_empty() {
            return Err(SignalIoError::EmptySignal(path.to_path_buf()));
        }
        (samples, uniform_rate(path, &times)?)
    } else {
        return Err(SignalIoError::CorruptHeader {
            path: path.to_path_buf(),
            reason: format!("line {header_line}: expected `time_s,mv` or `{RATE_PREFIX}<R>`"),
        });
    };

    if samples.is_empty() {
        return Err(SignalIoError::EmptySignal(path.to_path_buf()));
    }
    EcgRecord::new(samples, rate, path.to_string_lossy().into_owned())
}

fn uniform_rate(path: &Path, times: &[f64]) -> Result<f64, SignalIoError> {
    let non_uniform = |reason: String| SignalIoError::NonUniformSampling {
        path: path.to_path_buf(),
        reason,
    };
    if times.len() < 2 {
        return Err(non_uniform("at least two timestamps are needed to infer a rate".into()));
    }
    let t0 = times[0];
    let step = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(non_uniform("timestamps are not increasing".into()));
    }
    let rate = 1.0 / step;
    let tolerance = 0.25 / rate;
    for (i, &t) in times.iter().enumerate() {
        let jitter = (t - (t0 + i as f64 * step)).abs();
        if jitter >= tolerance {
            return Err(non_uniform(format!(
                "sample {i} at {t} s deviates {jitter:.6} s from the uniform grid"
            )));
        }
    }
    Ok(rate)
}

/// Writes the single-column layout. Values use shortest round-trip
/// formatting, so a reload is bit-identical.
pub fn write_ecg(record: &EcgRecord, path: impl AsRef<Path>) -> Result<(), SignalIoError> {
    let path = path.as_ref();
    let mut out = String::with_capacity(record.samples().len() * 10 + 32);
    writeln!(out, "{RATE_PREFIX}{}", record.sample_rate_hz()).unwrap();
    for v in record.samples() {
        writeln!(out, "{v}").unwrap();
    }
    std::fs::write(path, out).map_err(|source| SignalIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
