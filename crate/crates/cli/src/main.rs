use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use voicehr::classify::Algorithm;
use voicehr::pipeline::report::{load_summary, render_table3};
use voicehr::pipeline::{
    classifier_sweep, evaluate, exit_code, extract, filter_observations, read_features, render_report,
    run_experiment_combined, run_experiment_separate, write_features, ModelRecord, ModelStore, PipelineConfig,
    PipelineError, SynthSpec,
};
use voicehr::signal_io::load_manifest;

#[derive(Parser)]
#[command(name = "voicehr", version, about = "Heart-rate estimation from speech")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Separate,
    Combined,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Cvr,
    Gnb,
    Knn,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Cvr => Algorithm::ClassificationViaRegression,
            Algo::Gnb => Algorithm::GaussianNaiveBayes,
            Algo::Knn => Algorithm::NearestNeighbor,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with its ground-truth ledger.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute feature distance and heart rate for every manifest take.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write each take's cepstral matrix as CSV here.
        #[arg(long)]
        dump_cepstra: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit per-cell linear models and write them as JSON.
    Fit {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-subject held-out emotion classification accuracy.
    Classify {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        split: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every experiment and write the tables and summary.
    Report {
        #[arg(long)]
        features: PathBuf,
        /// Stored models to score instead of refitting.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict a heart rate from a stored model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        fd: f64,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Synth { spec, out, seed } => {
            let mut s = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<SynthSpec>(&text)
                        .map_err(|e| PipelineError::Validation(format!("{}: {e}", p.display())))?
                }
                None => SynthSpec::default(),
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let (manifest, _) = voicehr::pipeline::generate_synthetic_corpus(&s, &out)?;
            log::info!("wrote {} takes to {}", manifest.len(), out.display());
        }
        Command::Extract {
            manifest,
            config,
            out,
            dump_cepstra,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let m = load_manifest(&manifest).map_err(PipelineError::from)?;
            let result = extract(&m, &cfg, dump_cepstra.as_deref())?;
            for (entry, reason) in &result.failures {
                eprintln!(
                    "skipped {}/{}/{}: {reason}",
                    entry.subject_id, entry.emotion, entry.take_index
                );
            }
            write_features(&result.rows, &out)?;
        }
        Command::Fit {
            features,
            mode,
            out,
            config,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let rows = read_features(&features)?;
            let (kept, _) = filter_observations(rows.into_iter().map(|r| r.observation).collect(), &cfg.filter);
            let result = match mode {
                Mode::Separate => run_experiment_separate(&kept, &cfg, None),
                Mode::Combined => run_experiment_combined(&kept, &cfg, None),
            };
            for (key, reason) in &result.failures {
                eprintln!("skipped {key}: {reason}");
            }
            result.store().save_dir(&out)?;
        }
        Command::Classify {
            features,
            algo,
            split,
            seed,
            config,
            out,
        } => {
            let mut cfg = load_config(config.as_deref(), seed)?;
            if let Some(f) = split {
                cfg.split.train_fraction = f;
                cfg.validate()?;
            }
            let rows = read_features(&features)?;
            let matrix = classifier_sweep(&rows, &[algo.into()], &cfg);
            let text = render_table3(&matrix);
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Report {
            features,
            models,
            out,
            config,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let rows = read_features(&features)?;
            let store = models.as_ref().map(ModelStore::load_dir).transpose()?;
            let report = evaluate(&rows, &cfg, store.as_ref())?;
            render_report(&report, &out)?;
            debug_assert_eq!(load_summary(out.join("summary.json")).ok().as_ref(), Some(&report));
        }
        Command::Predict { model, fd } => {
            if !fd.is_finite() {
                return Err(PipelineError::Validation(format!("feature distance {fd} is not finite")).into());
            }
            let rec = ModelRecord::load(&model)?;
            println!("{}", rec.predict(fd));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit_code::VALIDATION as u8 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<PipelineError>()
                .map_or(exit_code::DATA, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
