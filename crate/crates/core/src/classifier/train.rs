use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{standardize, ModelSpec};
use super::Model;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::rng_for;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Seed-path tags separating the trainer's random streams.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Epochs (0-based) at whose start the learning rate is multiplied by
    /// `decay_factor`.
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    pub batch_size: usize,
    /// Stem and block-2 channel widths.
    pub widths: [usize; 2],
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 50,
            learning_rate: 0.07,
            decay_epochs: vec![20, 40],
            decay_factor: 0.1,
            batch_size: 128,
            widths: [16, 32],
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// A learning rate of exactly zero is accepted so the optimizer can be
    /// exercised as a no-op.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor.is_finite()) {
            return Err(Error::InvalidParameter(
                "decay factor must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let decays = self.decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.learning_rate * self.decay_factor.powi(decays as i32)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("training config serializes")
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: Model,
    /// Mean training loss of each epoch, in order.
    pub loss_history: Vec<f64>,
}

/// Initializes a model from `config` and trains it on `set`.
pub fn fit(set: &Dataset, config: &TrainingConfig, exec: Execution) -> Result<TrainingOutcome> {
    config.validate()?;
    let spec = ModelSpec::new(set.header.frame_len, set.num_classes())
        .with_widths(config.widths[0], config.widths[1]);
    let mut rng = rng_for(config.seed, &[STREAM_INIT]);
    let model = Model::init(spec, set.header.label_map.clone(), &mut rng)?;
    train(model, set, config, exec)
}

/// Mini-batch Adam with a step-decay schedule and seeded per-epoch
/// shuffling. Batches are reduced in a fixed order, so the result is the
/// same for any thread count.
pub fn train(
    mut model: Model,
    set: &Dataset,
    config: &TrainingConfig,
    exec: Execution,
) -> Result<TrainingOutcome> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::Sizing("training set is empty".into()));
    }
    if set.header.label_map != model.label_map {
        return Err(Error::LabelMismatch(format!(
            "model labels {:?} differ from training set labels {:?}",
            model.label_map, set.header.label_map
        )));
    }
    let inputs = exec.try_map_range(set.len(), |i| {
        if set.frames[i].len() != model.spec.frame_len {
            return Err(Error::Sizing(format!(
                "model expects frames of length {}, frame {i} has {}",
                model.spec.frame_len,
                set.frames[i].len()
            )));
        }
        standardize(set.frames[i].as_slice())
    })?;
    let labels: Vec<usize> = set.frames.iter().map(|f| usize::from(f.label)).collect();

    let n_params = model.params().len();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut t = 0i32;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..set.len()).collect();

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.sort_unstable();
        order.shuffle(&mut rng_for(config.seed, &[STREAM_SHUFFLE, epoch as u64]));
        let mut total = 0.0;
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grad) = model.loss_and_grads_std(&xs, &ys, exec)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, step, loss });
            }
            total += loss * batch.len() as f64;

            t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for (((p, g), mi), vi) in model
                .params_mut()
                .iter_mut()
                .zip(&grad)
                .zip(&mut m)
                .zip(&mut v)
            {
                *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * g;
                *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (*mi / c1) / ((*vi / c2).sqrt() + ADAM_EPS);
            }
            if model.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Diverged { epoch, step, loss });
            }
        }
        history.push(total / set.len() as f64);
    }
    model.provenance = serde_json::json!({
        "training": config,
        "train_set": {
            "master_seed": set.header.master_seed,
            "frames": set.len(),
            "generation": set.header.generation,
        },
    });
    Ok(TrainingOutcome {
        model,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetHeader, Split};
    use crate::frame::IqFrame;

    /// Constant +1 frames (class 0) against constant −1 frames (class 1). Q is
    /// the negated I row so per-frame standardization does not erase the class.
    fn separable(n: usize, len: usize) -> Dataset {
        let frames = (0..n)
            .map(|k| {
                let class = (k % 2) as u16;
                let s = if class == 0 { 1.0 } else { -1.0 };
                IqFrame::new(&vec![s; len], &vec![-s; len], class, 0).unwrap()
            })
            .collect();
        Dataset {
            header: DatasetHeader {
                frame_len: len,
                label_map: vec!["POS".into(), "NEG".into()],
                snr_grid: vec![0],
                split: Split::Train,
                master_seed: 0,
                generation: serde_json::Value::Null,
            },
            frames,
        }
    }

    fn small(epochs: usize, lr: f64) -> TrainingConfig {
        TrainingConfig {
            epochs,
            learning_rate: lr,
            batch_size: 8,
            widths: [4, 8],
            seed: 11,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn separable_toy_is_learned_within_five_epochs() {
        let set = separable(32, 64);
        let out = fit(&set, &small(5, 0.01), Execution::Sequential).unwrap();
        let refs: Vec<&IqFrame> = set.frames.iter().collect();
        let pred = out.model.predict(&refs, Execution::Sequential).unwrap();
        let correct = pred
            .iter()
            .zip(&set.frames)
            .filter(|(p, f)| **p == usize::from(f.label))
            .count();
        assert_eq!(correct, set.len());
        assert_eq!(out.loss_history.len(), 5);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let set = separable(24, 64);
        let a = fit(&set, &small(3, 0.01), Execution::Sequential).unwrap();
        let b = fit(&set, &small(3, 0.01), Execution::Parallel).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.model.params(), b.model.params());
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let set = separable(24, 64);
        let cfg = small(4, 0.0);
        let mut rng = rng_for(cfg.seed, &[STREAM_INIT]);
        let spec = ModelSpec::new(64, 2).with_widths(4, 8);
        let init = Model::init(spec, set.header.label_map.clone(), &mut rng).unwrap();
        let out = train(init.clone(), &set, &cfg, Execution::Sequential).unwrap();
        assert_eq!(out.model.params(), init.params());
        for l in &out.loss_history {
            assert!((l - out.loss_history[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_and_validation() {
        let cfg = TrainingConfig::default();
        assert_eq!(cfg.learning_rate_at(0), 0.07);
        assert!((cfg.learning_rate_at(20) - 0.007).abs() < 1e-15);
        assert!((cfg.learning_rate_at(45) - 0.0007).abs() < 1e-15);
        assert!(TrainingConfig {
            epochs: 0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(TrainingConfig {
            learning_rate: -1.0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert_eq!(TrainingConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn divergence_is_reported() {
        let set = separable(8, 64);
        let cfg = small(2, 1e300);
        assert!(matches!(
            fit(&set, &cfg, Execution::Sequential),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn label_map_mismatch_is_rejected() {
        let set = separable(8, 64);
        let spec = ModelSpec::new(64, 2).with_widths(4, 8);
        let model = Model::init(spec, vec!["A".into(), "B".into()], &mut rng_for(0, &[])).unwrap();
        assert!(matches!(
            train(model, &set, &small(1, 0.01), Execution::Sequential),
            Err(Error::LabelMismatch(_))
        ));
    }
}
