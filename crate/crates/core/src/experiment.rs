//! Multi-seed comparison of augmentation plans on a fixed profile.
//!
//! For every seed the train and test sets are synthesized once and shared by
//! all arms. Within a seed every arm also shares the augmentation seed and
//! the weight initialization, so differences between arms come from the
//! training data alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{build_augmented_set, AugmentationPlan, Method, PowerMode};
use crate::classifier::{evaluate, fit, TrainingConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::derive_seed;
use crate::synthesis::{synthesize_dataset, Profile};
use crate::wavelet::WaveletName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arm {
    pub name: String,
    pub plan: AugmentationPlan,
}

impl Arm {
    pub fn new(name: &str, plan: AugmentationPlan) -> Self {
        Arm {
            name: name.to_string(),
            plan,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub seeds: Vec<u64>,
    pub training: TrainingConfig,
    pub arms: Vec<Arm>,
}

impl ExperimentConfig {
    /// RML1024-mini, five seeds, and the arms needed to compare RNSR against
    /// no augmentation, RNSR-MW and the segment/flip baselines. Training is
    /// shortened from the full-scale schedule to fit a single CPU core.
    /// The RNSR arms use energy-exact replacement; see [`PowerMode`].
    pub fn desk_scale() -> Self {
        let plan = |m: Method, d: usize| AugmentationPlan::new(m, d, 3, 0);
        let rnsr = |m: Method, d: usize| plan(m, d).with_power_mode(PowerMode::EnergyExact);
        ExperimentConfig {
            profile: Profile::rml1024_mini(0),
            seeds: vec![1, 2, 3, 4, 5],
            training: TrainingConfig {
                epochs: 10,
                learning_rate: 0.003,
                decay_epochs: vec![7],
                decay_factor: 0.1,
                batch_size: 16,
                widths: [16, 32],
                seed: 0,
            },
            arms: vec![
                Arm::new("none", AugmentationPlan::none()),
                Arm::new("rnsr_d4", rnsr(Method::Rnsr, 4)),
                Arm::new("rnsr_d1", rnsr(Method::Rnsr, 1)),
                Arm::new(
                    "rnsr_mw_d1",
                    rnsr(Method::RnsrMw, 1).with_wavelets(WaveletName::ALL.to_vec()),
                ),
                Arm::new("flip", plan(Method::Flip, 1)),
                Arm::new("segcs3", plan(Method::SegCs, 1).with_seg_k(3)),
                Arm::new("segcs3x3", plan(Method::SegCs, 3).with_seg_k(3)),
                Arm::new("segmc2", plan(Method::SegMc, 1).with_seg_k(2)),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::Config("experiment needs at least one arm".into()));
        }
        for (k, arm) in self.arms.iter().enumerate() {
            if self.arms[..k].iter().any(|a| a.name == arm.name) {
                return Err(Error::Config(format!("arm `{}` listed twice", arm.name)));
            }
            arm.plan.validate()?;
        }
        self.profile.validate()?;
        self.training.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub name: String,
    pub label: String,
    /// Training-set size for each seed.
    pub train_frames: Vec<usize>,
    /// Overall test accuracy for each seed.
    pub accuracy: Vec<f64>,
    /// Per-class accuracy for each seed, keyed by scheme name.
    pub class_accuracy: BTreeMap<String, Vec<f64>>,
    /// Per-SNR accuracy for each seed, keyed by SNR in dB.
    pub snr_accuracy: BTreeMap<i32, Vec<f64>>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl ArmResult {
    pub fn mean_accuracy(&self) -> f64 {
        mean(&self.accuracy)
    }

    pub fn mean_class_accuracy(&self, class: &str) -> Option<f64> {
        self.class_accuracy.get(class).map(|v| mean(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub arms: Vec<ArmResult>,
}

impl ExperimentReport {
    pub fn arm(&self, name: &str) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.name == name)
    }

    /// One row per arm: mean and sample standard deviation of overall
    /// accuracy, then the mean per-class accuracies.
    pub fn table(&self) -> String {
        let classes = self.config.profile.label_map();
        let mut out = format!(
            "# profile={} seeds={:?} epochs={} lr={} batch={}\n",
            self.config.profile.name,
            self.config.seeds,
            self.config.training.epochs,
            self.config.training.learning_rate,
            self.config.training.batch_size
        );
        out.push_str("arm,plan,mean_train_frames,mean_accuracy,std_accuracy");
        for c in &classes {
            let _ = write!(out, ",acc_{c}");
        }
        out.push('\n');
        for a in &self.arms {
            let frames = a.train_frames.iter().sum::<usize>() / a.train_frames.len().max(1);
            let _ = write!(
                out,
                "{},{},{},{:.4},{:.4}",
                a.name,
                a.label.replace(',', ";"),
                frames,
                a.mean_accuracy(),
                std_dev(&a.accuracy)
            );
            for c in &classes {
                let _ = write!(out, ",{:.4}", a.mean_class_accuracy(c).unwrap_or(f64::NAN));
            }
            out.push('\n');
        }
        out
    }

    /// Mean accuracy per SNR (rows) for every arm (columns).
    pub fn snr_table(&self) -> String {
        let mut out = String::from("snr_db");
        for a in &self.arms {
            let _ = write!(out, ",{}", a.name);
        }
        out.push('\n');
        let snrs: Vec<i32> = self
            .arms
            .first()
            .map(|a| a.snr_accuracy.keys().copied().collect())
            .unwrap_or_default();
        for s in snrs {
            let _ = write!(out, "{s}");
            for a in &self.arms {
                let _ = write!(
                    out,
                    ",{:.4}",
                    a.snr_accuracy.get(&s).map_or(f64::NAN, |v| mean(v))
                );
            }
            out.push('\n');
        }
        out
    }

    /// Writes `experiment.json`, `comparison.csv` and `accuracy_vs_snr.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("experiment.json"),
            serde_json::to_string_pretty(self)? + "\n",
        )?;
        std::fs::write(dir.join("comparison.csv"), self.table())?;
        std::fs::write(dir.join("accuracy_vs_snr.csv"), self.snr_table())?;
        Ok(())
    }
}

/// Runs every arm for every seed. `progress` receives one line per
/// completed (seed, arm) pair.
pub fn run_experiment(
    config: &ExperimentConfig,
    exec: Execution,
    progress: &mut dyn FnMut(&str),
) -> Result<ExperimentReport> {
    config.validate()?;
    let mut arms: Vec<ArmResult> = config
        .arms
        .iter()
        .map(|a| ArmResult {
            name: a.name.clone(),
            label: a.plan.label(),
            train_frames: Vec::new(),
            accuracy: Vec::new(),
            class_accuracy: BTreeMap::new(),
            snr_accuracy: BTreeMap::new(),
        })
        .collect();
    for &seed in &config.seeds {
        let mut profile = config.profile.clone();
        profile.master_seed = seed;
        let sets = synthesize_dataset(&profile, exec)?;
        let training = config.training.clone().with_seed(derive_seed(seed, &[2]));
        for (arm, result) in config.arms.iter().zip(&mut arms) {
            let mut plan = arm.plan.clone();
            plan.seed = derive_seed(seed, &[1]);
            let train = build_augmented_set(&sets.train, &plan, exec)?;
            let outcome = fit(&train, &training, exec)?;
            let report = evaluate(&outcome.model, &sets.test, exec)?;
            result.train_frames.push(train.len());
            result.accuracy.push(report.overall_accuracy);
            for c in &report.per_class {
                result
                    .class_accuracy
                    .entry(c.class.clone())
                    .or_default()
                    .push(c.accuracy.unwrap_or(f64::NAN));
            }
            for s in &report.per_snr {
                result
                    .snr_accuracy
                    .entry(s.snr_db)
                    .or_default()
                    .push(s.accuracy);
            }
            progress(&format!(
                "seed {seed} {}: {} train frames, accuracy {:.4}",
                arm.name,
                train.len(),
                report.overall_accuracy
            ));
        }
    }
    Ok(ExperimentReport {
        config: config.clone(),
        arms,
    })
}
