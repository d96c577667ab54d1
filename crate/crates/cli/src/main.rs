//! `wavaug` command-line driver.
//!
//! Experiment definitions live in TOML files; flags carry only paths and
//! seed overrides. Every successful run writes a `run.toml` record with the
//! fully resolved configuration beside its outputs. Failures print one JSON
//! line to stderr and exit non-zero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wavaug::augment::{build_augmented_set, AugmentationPlan};
use wavaug::classifier::{evaluate, fit, EvaluationReport, Model, TrainingConfig};
use wavaug::dataset::{manifest_path, payload_path, read_dataset, write_dataset, Split};
use wavaug::experiment::{run_experiment, ExperimentConfig};
use wavaug::selftest::run_selftest;
use wavaug::synthesis::{synthesize_split, Profile};
use wavaug::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "wavaug",
    version,
    about = "Wavelet detail-replacement augmentation for radio IQ datasets"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Splits {
    Train,
    Test,
    Both,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Synthesize train/test datasets from a profile.
    Generate {
        /// Profile TOML file.
        #[arg(long, conflicts_with = "profile")]
        config: Option<PathBuf>,
        /// Built-in profile name (rml1024, rml1024-mini).
        #[arg(long, default_value = "rml1024-mini")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "both")]
        split: Splits,
    },
    /// Apply an augmentation plan to a training set.
    Augment {
        /// Plan TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Input dataset prefix (without extension).
        #[arg(long)]
        input: PathBuf,
        /// Output dataset prefix.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the classifier.
    Train {
        /// Training TOML file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training dataset prefix.
        #[arg(long)]
        train: PathBuf,
        /// Output directory for the model and loss history.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained model on a test set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Test dataset prefix.
        #[arg(long)]
        test: PathBuf,
        /// Output directory for report tables.
        #[arg(long)]
        out: PathBuf,
    },
    /// Side-by-side comparison of several evaluation outputs.
    Report {
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        /// Evaluation directories or report.json files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the built-in invariant suites.
    Selftest {
        /// Run only the named suite(s).
        #[arg(long)]
        only: Vec<String>,
        /// Directory for the JSON result.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-seed comparison of augmentation plans.
    Experiment {
        /// Experiment TOML file; the desk-scale comparison when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seed list overriding the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Augment { .. } => "augment",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Report { .. } => "report",
            Command::Selftest { .. } => "selftest",
            Command::Experiment { .. } => "experiment",
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    execution: &'static str,
    command: &'a Command,
    config: &'a C,
}

fn write_record<C: Serialize>(path: &Path, cli: &Cli, config: &C) -> Result<()> {
    let record = RunRecord {
        tool: "wavaug",
        version: env!("CARGO_PKG_VERSION"),
        execution: if cli.sequential {
            "sequential"
        } else {
            "parallel"
        },
        command: &cli.command,
        config,
    };
    let text = toml::to_string(&record).context("serializing run record")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Removes registered outputs unless disarmed, so a failed run leaves
/// nothing half-written behind.
#[derive(Default)]
struct Outputs {
    paths: Vec<PathBuf>,
    armed: bool,
}

impl Outputs {
    fn new() -> Self {
        Outputs {
            paths: Vec::new(),
            armed: true,
        }
    }

    fn dataset(&mut self, prefix: &Path) {
        self.paths.push(manifest_path(prefix));
        self.paths.push(payload_path(prefix));
    }

    fn file(&mut self, path: PathBuf) {
        self.paths.push(path);
    }

    fn keep(mut self) {
        self.armed = false;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.armed {
            for p in &self.paths {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

fn record_path(prefix: &Path) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".run.toml");
    PathBuf::from(s)
}

fn run(cli: &Cli) -> Result<String> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Generate {
            config,
            profile,
            out,
            seed,
            split,
        } => {
            let mut p = match config {
                Some(path) => Profile::load(path)
                    .with_context(|| format!("loading profile {}", path.display()))?,
                None => Profile::builtin(profile, 0)?,
            };
            if let Some(s) = seed {
                p.master_seed = *s;
            }
            p.validate()?;
            std::fs::create_dir_all(out)?;
            let mut outputs = Outputs::new();
            let splits: &[Split] = match split {
                Splits::Train => &[Split::Train],
                Splits::Test => &[Split::Test],
                Splits::Both => &[Split::Train, Split::Test],
            };
            let mut counts = Vec::new();
            for &sp in splits {
                let prefix = out.join(if sp == Split::Train { "train" } else { "test" });
                outputs.dataset(&prefix);
                let set = synthesize_split(&p, sp, exec)?;
                write_dataset(&set, &prefix)?;
                counts.push(format!(
                    "{} {}",
                    set.len(),
                    if sp == Split::Train { "train" } else { "test" }
                ));
            }
            let rec = out.join("run.toml");
            outputs.file(rec.clone());
            write_record(&rec, cli, &p)?;
            outputs.keep();
            Ok(format!(
                "generated {} frames ({}) in {}",
                p.name,
                counts.join(", "),
                out.display()
            ))
        }
        Command::Augment {
            config,
            input,
            out,
            seed,
        } => {
            let mut plan = AugmentationPlan::load(config)
                .with_context(|| format!("loading plan {}", config.display()))?;
            if let Some(s) = seed {
                plan.seed = *s;
            }
            let source =
                read_dataset(input).with_context(|| format!("reading {}", input.display()))?;
            let augmented = build_augmented_set(&source, &plan, exec)?;
            let mut outputs = Outputs::new();
            outputs.dataset(out);
            write_dataset(&augmented, out)?;
            let rec = record_path(out);
            outputs.file(rec.clone());
            write_record(&rec, cli, &plan)?;
            outputs.keep();
            Ok(format!(
                "{}: {} -> {} frames at {}",
                plan.label(),
                source.len(),
                augmented.len(),
                out.display()
            ))
        }
        Command::Train {
            config,
            train,
            out,
            seed,
        } => {
            let mut cfg = match config {
                Some(path) => TrainingConfig::load(path)
                    .with_context(|| format!("loading {}", path.display()))?,
                None => TrainingConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            let set =
                read_dataset(train).with_context(|| format!("reading {}", train.display()))?;
            let outcome = fit(&set, &cfg, exec)?;
            std::fs::create_dir_all(out)?;
            let mut outputs = Outputs::new();
            let model_path = out.join("model.json");
            outputs.file(model_path.clone());
            outcome.model.save(&model_path)?;
            let mut history = format!(
                "# loss history: {} frames, seed {}\nepoch,learning_rate,loss\n",
                set.len(),
                cfg.seed
            );
            for (e, l) in outcome.loss_history.iter().enumerate() {
                history.push_str(&format!("{e},{},{l:.9}\n", cfg.learning_rate_at(e)));
            }
            let hist_path = out.join("loss_history.csv");
            outputs.file(hist_path.clone());
            std::fs::write(&hist_path, history)?;
            let rec = out.join("run.toml");
            outputs.file(rec.clone());
            write_record(&rec, cli, &cfg)?;
            outputs.keep();
            Ok(format!(
                "trained on {} frames for {} epochs, final loss {:.4}; model at {}",
                set.len(),
                cfg.epochs,
                outcome.loss_history.last().copied().unwrap_or(f64::NAN),
                model_path.display()
            ))
        }
        Command::Eval { model, test, out } => {
            let m =
                Model::load(model).with_context(|| format!("loading model {}", model.display()))?;
            let set = read_dataset(test).with_context(|| format!("reading {}", test.display()))?;
            let report = evaluate(&m, &set, exec)?;
            let mut outputs = Outputs::new();
            for f in [
                "report.json",
                "accuracy_vs_snr.csv",
                "per_class.csv",
                "confusion.csv",
                "run.toml",
            ] {
                outputs.file(out.join(f));
            }
            report.write(out)?;
            write_record(&out.join("run.toml"), cli, &m.spec)?;
            outputs.keep();
            Ok(format!(
                "overall accuracy {:.4} on {} frames; tables in {}",
                report.overall_accuracy,
                report.frames,
                out.display()
            ))
        }
        Command::Report { out, inputs } => {
            let mut reports = Vec::new();
            for input in inputs {
                let path = if input.is_dir() {
                    input.join("report.json")
                } else {
                    input.clone()
                };
                let r = EvaluationReport::load(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let name = if input.is_dir() {
                    input.as_path()
                } else {
                    input.parent().unwrap_or(input)
                };
                let name = name.file_name().map_or_else(
                    || input.display().to_string(),
                    |n| n.to_string_lossy().into_owned(),
                );
                reports.push((name, r));
            }
            let table = comparison_table(&reports)?;
            let mut outputs = Outputs::new();
            outputs.file(out.clone());
            std::fs::write(out, &table)?;
            let rec = record_path(out);
            outputs.file(rec.clone());
            let sources: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
            write_record(&rec, cli, &sources)?;
            outputs.keep();
            let best = reports
                .iter()
                .max_by(|a, b| a.1.overall_accuracy.total_cmp(&b.1.overall_accuracy))
                .map(|(n, r)| format!("{n} ({:.4})", r.overall_accuracy))
                .unwrap_or_default();
            Ok(format!(
                "compared {} reports; best {best}; table at {}",
                reports.len(),
                out.display()
            ))
        }
        Command::Selftest { only, out } => {
            let names = wavaug::selftest::suite_names();
            if let Some(bad) = only.iter().find(|n| !names.contains(&n.as_str())) {
                bail!("unknown suite `{bad}`; available: {}", names.join(", "));
            }
            let report = run_selftest(exec, &only.iter().map(String::as_str).collect::<Vec<_>>());
            for s in &report.suites {
                println!(
                    "{} {} ({:.2}s): {}",
                    if s.passed { "PASS" } else { "FAIL" },
                    s.name,
                    s.seconds,
                    s.detail
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(dir)?;
                let body = toml::to_string(&report).context("serializing selftest report")?;
                std::fs::write(dir.join("selftest.toml"), body)?;
                write_record(&dir.join("run.toml"), cli, &names)?;
            }
            let failed: Vec<&str> = report
                .suites
                .iter()
                .filter(|s| !s.passed)
                .map(|s| s.name)
                .collect();
            if !failed.is_empty() {
                bail!("selftest failed: {}", failed.join(", "));
            }
            Ok(format!("selftest: {} suites passed", report.suites.len()))
        }
        Command::Experiment { config, out, seeds } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(path)
                    .with_context(|| format!("loading {}", path.display()))?,
                None => ExperimentConfig::desk_scale(),
            };
            if let Some(s) = seeds {
                cfg.seeds = s.clone();
            }
            let report = run_experiment(&cfg, exec, &mut |line| eprintln!("{line}"))?;
            let mut outputs = Outputs::new();
            for f in [
                "experiment.json",
                "comparison.csv",
                "accuracy_vs_snr.csv",
                "run.toml",
            ] {
                outputs.file(out.join(f));
            }
            report.write(out)?;
            write_record(&out.join("run.toml"), cli, &cfg)?;
            outputs.keep();
            print!("{}", report.table());
            Ok(format!(
                "experiment with {} arms x {} seeds written to {}",
                cfg.arms.len(),
                cfg.seeds.len(),
                out.display()
            ))
        }
    }
}

/// One row per report: overall accuracy, per-class accuracy, then accuracy
/// at each SNR. All reports must share the label map.
fn comparison_table(reports: &[(String, EvaluationReport)]) -> Result<String> {
    let (_, first) = &reports[0];
    let snrs: Vec<i32> = first.per_snr.iter().map(|s| s.snr_db).collect();
    for (name, r) in reports {
        if r.label_map != first.label_map {
            bail!("report `{name}` has a different label map");
        }
    }
    let mut out = String::from("method,frames,overall");
    for c in &first.label_map {
        out.push_str(&format!(",acc_{c}"));
    }
    for s in &snrs {
        out.push_str(&format!(",snr_{s}"));
    }
    out.push('\n');
    for (name, r) in reports {
        out.push_str(&format!("{name},{},{:.6}", r.frames, r.overall_accuracy));
        for c in &r.per_class {
            out.push_str(&format!(
                ",{}",
                c.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default()
            ));
        }
        for s in &snrs {
            let acc = r
                .per_snr
                .iter()
                .find(|p| p.snr_db == *s)
                .map(|p| format!("{:.6}", p.accuracy));
            out.push_str(&format!(",{}", acc.unwrap_or_default()));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct Failure<'a> {
    status: &'static str,
    command: &'a str,
    message: String,
}

fn fail(command: &str, message: String) -> ExitCode {
    let line = Failure {
        status: "error",
        command,
        message: message.replace('\n', " "),
    };
    eprintln!(
        "{}",
        serde_json::to_string(&line).unwrap_or_else(|_| "{\"status\":\"error\"}".into())
    );
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return fail("args", first.trim_start_matches("error: ").to_string());
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(cli.command.name(), format!("{e:#}")),
    }
}
