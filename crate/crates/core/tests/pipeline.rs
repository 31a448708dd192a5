//! End-to-end properties of the synthetic pipeline on small corpora.

use voicehr::pipeline::report::load_summary;
use voicehr::pipeline::synth::read_ledger;
use voicehr::pipeline::{
    evaluate, extract, generate_synthetic_corpus, render_report, run_experiment_separate, FeatureRow, PipelineConfig,
    SynthSpec,
};
use voicehr::signal_io::load_manifest;
use voicehr::stats::Observation;

fn corpus(spec: &SynthSpec) -> (tempfile::TempDir, Vec<FeatureRow>) {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic_corpus(spec, dir.path()).unwrap();
    let manifest = load_manifest(dir.path().join("manifest.csv")).unwrap();
    let out = extract(&manifest, &PipelineConfig::default(), None).unwrap();
    assert!(out.failures.is_empty());
    (dir, out.rows)
}

fn observations(rows: &[FeatureRow]) -> Vec<Observation> {
    rows.iter().map(|r| r.observation.clone()).collect()
}

#[test]
fn noiseless_extraction_reproduces_ledger() {
    let spec = SynthSpec {
        n_subjects: 3,
        takes_per_emotion: 12,
        noise_std_bpm: 0.0,
        seed: 21,
        ..SynthSpec::default()
    };
    let (dir, rows) = corpus(&spec);
    let ledger = read_ledger(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(ledger.len(), rows.len());
    for (truth, row) in ledger.iter().zip(&rows) {
        let o = &row.observation;
        assert_eq!(
            (&truth.subject_id, truth.emotion, truth.take_index),
            (&o.subject_id, o.emotion, o.take_index)
        );
        assert!((o.feature_distance - truth.feature_distance).abs() <= 0.05 * truth.feature_distance);
        assert!((o.heart_rate_bpm - truth.heart_rate_bpm).abs() <= 1.0);
        assert!((truth.feature_distance - truth.target_fd).abs() <= 0.1 * truth.target_fd);
    }
}

#[test]
fn noiseless_fits_recover_planted_lines() {
    let spec = SynthSpec {
        n_subjects: 4,
        takes_per_emotion: 30,
        noise_std_bpm: 0.0,
        seed: 22,
        ..SynthSpec::default()
    };
    let (dir, rows) = corpus(&spec);
    let ledger = read_ledger(dir.path().join("ledger.csv")).unwrap();
    let out = run_experiment_separate(&observations(&rows), &PipelineConfig::default(), None);
    assert_eq!(out.cells.len(), 12);
    for c in &out.cells {
        let truth = ledger
            .iter()
            .find(|l| l.subject_id == c.key.subject_id && Some(l.emotion) == c.key.emotion)
            .unwrap();
        let rel = (c.model.beta1 - truth.planted_beta1).abs() / truth.planted_beta1;
        assert!(
            rel <= 0.10,
            "{}: slope {} vs {}",
            c.key,
            c.model.beta1,
            truth.planted_beta1
        );
        assert!(
            (c.model.beta0 - truth.planted_beta0).abs() <= 2.0,
            "{}: intercept",
            c.key
        );
    }
}

#[test]
fn median_cell_error_grows_with_noise() {
    let mut medians = Vec::new();
    for noise in [1.0, 3.0, 6.0] {
        let spec = SynthSpec {
            n_subjects: 5,
            takes_per_emotion: 30,
            noise_std_bpm: noise,
            seed: 23,
            ..SynthSpec::default()
        };
        let (_dir, rows) = corpus(&spec);
        let out = run_experiment_separate(&observations(&rows), &PipelineConfig::default(), None);
        let mut errs: Vec<f64> = out.cells.iter().map(|c| c.score.relative_error_pct).collect();
        errs.sort_by(f64::total_cmp);
        medians.push(errs[errs.len() / 2]);
    }
    assert!(medians.windows(2).all(|w| w[0] <= w[1]), "{medians:?}");
}

#[test]
fn report_is_internally_consistent_and_reloads() {
    let spec = SynthSpec {
        n_subjects: 3,
        takes_per_emotion: 20,
        seed: 24,
        ..SynthSpec::default()
    };
    let (_dir, rows) = corpus(&spec);
    let report = evaluate(&rows, &PipelineConfig::default(), None).unwrap();
    for r in &report.table_separate {
        for s in [r.joy, r.neutral, r.anger].into_iter().flatten() {
            assert!((s.accuracy_pct + s.relative_error_pct - 100.0).abs() < 1e-9);
        }
    }
    for r in &report.table_combined_vs_separate {
        let m = (r.joy.unwrap() + r.neutral.unwrap() + r.anger.unwrap()) / 3.0;
        assert!((r.average - m).abs() <= 0.01);
    }
    assert_eq!(report.classifier_matrix.rows.len(), 3);
    assert_eq!(report.classifier_matrix.subjects.len(), 3);
    assert!((0.0..=100.0).contains(&report.general_model_pct));

    let out = tempfile::tempdir().unwrap();
    render_report(&report, out.path()).unwrap();
    assert_eq!(load_summary(out.path().join("summary.json")).unwrap(), report);
    let t1 = std::fs::read_to_string(out.path().join("table1.csv")).unwrap();
    assert_eq!(t1.lines().count(), 4);
    assert!(t1.starts_with("subject,joy_err,neutral_err,anger_err,joy_acc,neutral_acc,anger_acc\n"));
}

#[test]
fn same_seed_same_corpus_bytes() {
    let spec = SynthSpec {
        n_subjects: 2,
        takes_per_emotion: 4,
        seed: 25,
        ..SynthSpec::default()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_synthetic_corpus(&spec, a.path()).unwrap();
    generate_synthetic_corpus(&spec, b.path()).unwrap();
    for rel in [
        "ledger.csv",
        "manifest.csv",
        "audio/s01_joy_000.wav",
        "ecg/s02_anger_003.csv",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(rel)).unwrap(),
            std::fs::read(b.path().join(rel)).unwrap(),
            "{rel}"
        );
    }
    let other = tempfile::tempdir().unwrap();
    generate_synthetic_corpus(&SynthSpec { seed: 26, ..spec }, other.path()).unwrap();
    assert_ne!(
        std::fs::read(a.path().join("ledger.csv")).unwrap(),
        std::fs::read(other.path().join("ledger.csv")).unwrap()
    );
}
