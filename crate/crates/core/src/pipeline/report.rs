//! CSV tables (two decimals, half-up) and a full-precision JSON summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::{ClassifierMatrix, ComparisonRow, EvaluationReport, SeparateRow};
use super::store::ModelRecord;
use super::PipelineError;

pub const TABLE1_HEADER: &str = "subject,joy_err,neutral_err,anger_err,joy_acc,neutral_acc,anger_acc";
pub const TABLE2_HEADER: &str = "subject,combined,average,joy,neutral,anger";
pub const MAX_ACCURACY_ROW: &str = "max accuracy percentage";
pub const MIN_ERROR_ROW: &str = "min error percentage";

/// Decimal rounding, ties away from zero, on the value's 12-digit decimal
/// expansion so that e.g. 1.005 rounds to "1.01".
pub fn round_to(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{:.12}", x.abs());
    let (int, frac) = s.split_once('.').expect("fixed-point format has a dot");
    let mut digits: Vec<u8> = int.bytes().chain(frac[..decimals].bytes()).map(|b| b - b'0').collect();
    if frac.as_bytes()[decimals] >= b'5' {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let text = |d: &[u8]| d.iter().map(|v| char::from(b'0' + v)).collect::<String>();
    let mut out = text(&digits[..split]);
    if decimals > 0 {
        out.push('.');
        out.push_str(&text(&digits[split..]));
    }
    if x < 0.0 && digits.iter().any(|&d| d != 0) {
        out.insert(0, '-');
    }
    out
}

pub fn round_half_up(x: f64) -> String {
    round_to(x, 2)
}

fn cell(v: Option<f64>) -> String {
    v.map(round_half_up).unwrap_or_default()
}

pub fn render_table1(rows: &[SeparateRow]) -> String {
    let mut out = format!("{TABLE1_HEADER}\n");
    for r in rows {
        let cells = [r.joy, r.neutral, r.anger];
        let errs: Vec<String> = cells.iter().map(|c| cell(c.map(|s| s.relative_error_pct))).collect();
        let accs: Vec<String> = cells.iter().map(|c| cell(c.map(|s| s.accuracy_pct))).collect();
        writeln!(out, "{},{},{}", r.subject_id, errs.join(","), accs.join(",")).unwrap();
    }
    out
}

pub fn render_table2(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{TABLE2_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.subject_id,
            round_half_up(r.combined),
            round_half_up(r.average),
            cell(r.joy),
            cell(r.neutral),
            cell(r.anger)
        )
        .unwrap();
    }
    out
}

pub fn render_table3(matrix: &ClassifierMatrix) -> String {
    let mut out = String::from("classifier");
    for s in &matrix.subjects {
        write!(out, ",{s}").unwrap();
    }
    out.push('\n');
    let mut line = |name: &str, values: &[Option<f64>]| {
        out.push_str(name);
        for v in values {
            write!(out, ",{}", cell(*v)).unwrap();
        }
        out.push('\n');
    };
    for r in &matrix.rows {
        line(r.algorithm.display_name(), &r.accuracies);
    }
    line(MAX_ACCURACY_ROW, &matrix.max_accuracy());
    line(MIN_ERROR_ROW, &matrix.min_error());
    out
}

pub fn render_table4(report: &EvaluationReport) -> String {
    let mut out = String::from("classifier,average_accuracy\n");
    for a in &report.classifier_averages {
        writeln!(out, "{},{}", a.algorithm.display_name(), cell(a.average_accuracy)).unwrap();
    }
    out
}

pub fn render_models(models: &[ModelRecord]) -> String {
    let mut out = String::from("subject,emotion,beta0,beta1,n\n");
    for m in models {
        writeln!(
            out,
            "{},{},{},{},{}",
            m.subject_id,
            m.emotion,
            round_to(m.beta0, 3),
            round_to(m.beta1, 3),
            m.n
        )
        .unwrap();
    }
    out
}

fn general_model_text(report: &EvaluationReport) -> String {
    format!(
        "prediction_accuracy,classification_accuracy,general_model\n{},{},{}\n",
        round_half_up(report.prediction_accuracy_pct),
        round_half_up(report.classification_accuracy_pct),
        round_half_up(report.general_model_pct)
    )
}

/// Writes `table1.csv` .. `table4.csv`, `models.csv`, `general_model.csv`
/// and `summary.json` into `outdir`, returning the paths written.
pub fn render_report(report: &EvaluationReport, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>, PipelineError> {
    let outdir = outdir.as_ref();
    std::fs::create_dir_all(outdir).map_err(|e| PipelineError::io(outdir, e))?;
    let files = [
        ("table1.csv", render_table1(&report.table_separate)),
        ("table2.csv", render_table2(&report.table_combined_vs_separate)),
        ("table3.csv", render_table3(&report.classifier_matrix)),
        ("table4.csv", render_table4(report)),
        ("models.csv", render_models(&report.models)),
        ("general_model.csv", general_model_text(report)),
        (
            "summary.json",
            serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let p = outdir.join(name);
        std::fs::write(&p, text).map_err(|e| PipelineError::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}

pub fn load_summary(path: impl AsRef<Path>) -> Result<EvaluationReport, PipelineError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
