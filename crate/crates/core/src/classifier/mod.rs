//! Small residual CNN used to measure what augmentation buys.

mod eval;
mod gradcheck;
mod layers;
mod network;
mod train;

use std::path::Path;

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::IqFrame;

pub use eval::{evaluate, ClassAccuracy, EvaluationReport, SnrAccuracy};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, TensorCheck};
pub use network::{standardize, ModelSpec, TensorInfo};
pub use train::{fit, train, TrainingConfig, TrainingOutcome};

use network::{backward, forward_trace, softmax_xent};

/// Samples per work item when a batch is split across threads. Fixed so the
/// reduction order, and therefore the result, does not depend on threading.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub label_map: Vec<String>,
    params: Vec<f64>,
    /// Free-form record of how the weights were produced.
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl Model {
    /// He-normal convolution weights, `1/√fan_in` head weights, zero biases.
    pub fn init(spec: ModelSpec, label_map: Vec<String>, rng: &mut dyn RngCore) -> Result<Self> {
        spec.validate()?;
        if label_map.len() != spec.classes {
            return Err(Error::LabelMismatch(format!(
                "spec has {} classes but label map has {}",
                spec.classes,
                label_map.len()
            )));
        }
        let tensors = spec.tensors();
        let mut params = vec![0.0; spec.param_count()];
        for t in &tensors {
            if t.is_bias() {
                continue;
            }
            let fan_in = match t.name {
                "head.w" => spec.width,
                _ => t.len / fan_out(&spec, t.name),
            };
            let gain = if t.name == "head.w" { 1.0 } else { 2.0 };
            let normal = Normal::new(0.0, (gain / fan_in as f64).sqrt())
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for p in &mut params[t.range()] {
                *p = normal.sample(rng);
            }
        }
        Ok(Model {
            spec,
            label_map,
            params,
            provenance: serde_json::Value::Null,
        })
    }

    pub fn from_params(spec: ModelSpec, label_map: Vec<String>, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let model = Model {
            spec,
            label_map,
            params,
            provenance: serde_json::Value::Null,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if self.label_map.len() != self.spec.classes {
            return Err(Error::LabelMismatch(format!(
                "spec has {} classes but label map has {}",
                self.spec.classes,
                self.label_map.len()
            )));
        }
        if self.params.len() != self.spec.param_count() {
            return Err(Error::Sizing(format!(
                "expected {} parameters, found {}",
                self.spec.param_count(),
                self.params.len()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(())
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.spec
            .tensors()
            .into_iter()
            .find(|t| t.name == name)
            .map(|t| &self.params[t.range()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let t = self.spec.tensors().into_iter().find(|t| t.name == name)?;
        Some(&mut self.params[t.range()])
    }

    fn input(&self, frame: &IqFrame) -> Result<Vec<f64>> {
        if frame.len() != self.spec.frame_len {
            return Err(Error::Sizing(format!(
                "model expects frames of length {}, got {}",
                self.spec.frame_len,
                frame.len()
            )));
        }
        standardize(frame.as_slice())
    }

    /// Logits for each frame, one row per frame.
    pub fn forward(&self, frames: &[&IqFrame], exec: Execution) -> Result<Vec<Vec<f64>>> {
        self.check()?;
        exec.try_map_range(frames.len(), |i| {
            let x = self.input(frames[i])?;
            Ok(forward_trace(&self.spec, &self.params, &x).logits)
        })
    }

    /// Arg-max class for each frame (lowest index on ties).
    pub fn predict(&self, frames: &[&IqFrame], exec: Execution) -> Result<Vec<usize>> {
        Ok(self
            .forward(frames, exec)?
            .iter()
            .map(|l| argmax(l))
            .collect())
    }

    /// Mean softmax cross-entropy over the batch and its gradient with
    /// respect to every parameter, in storage order.
    pub fn loss_and_grads(
        &self,
        frames: &[&IqFrame],
        labels: &[usize],
        exec: Execution,
    ) -> Result<(f64, Vec<f64>)> {
        let inputs = frames
            .iter()
            .map(|f| self.input(f))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        self.loss_and_grads_std(&views, labels, exec)
    }

    /// As [`Model::loss_and_grads`] but on inputs already standardized.
    pub(crate) fn loss_and_grads_std(
        &self,
        inputs: &[&[f64]],
        labels: &[usize],
        exec: Execution,
    ) -> Result<(f64, Vec<f64>)> {
        self.check()?;
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::Sizing(format!(
                "batch of {} frames with {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.spec.classes) {
            return Err(Error::LabelMismatch(format!(
                "label {bad} out of range for {} classes",
                self.spec.classes
            )));
        }
        let scale = 1.0 / inputs.len() as f64;
        let chunks = inputs.len().div_ceil(CHUNK);
        let parts = exec.map_range(chunks, |c| {
            let mut grad = vec![0.0; self.params.len()];
            let mut loss = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(inputs.len()) {
                let tr = forward_trace(&self.spec, &self.params, inputs[i]);
                let (l, d) = softmax_xent(&tr.logits, labels[i]);
                loss += l;
                backward(
                    &self.spec,
                    &self.params,
                    inputs[i],
                    &tr,
                    &d,
                    scale,
                    &mut grad,
                );
            }
            (loss, grad)
        });
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.params.len()];
        for (l, g) in parts {
            loss += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        Ok((loss * scale, grad))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: Model = serde_json::from_slice(&std::fs::read(path)?)?;
        model.spec.validate()?;
        model.check()?;
        Ok(model)
    }
}

fn fan_out(spec: &ModelSpec, name: &str) -> usize {
    if name.starts_with("stem") || name.starts_with("block1") {
        spec.stem_width
    } else {
        spec.width
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("C{i}")).collect()
    }

    fn frames(n: usize, len: usize) -> Vec<IqFrame> {
        (0..n)
            .map(|k| {
                let i: Vec<f32> = (0..len)
                    .map(|t| ((t * (k + 2)) as f32 * 0.05).sin())
                    .collect();
                let q: Vec<f32> = (0..len)
                    .map(|t| ((t * (k + 1)) as f32 * 0.11).cos())
                    .collect();
                IqFrame::new(&i, &q, 0, 0).unwrap()
            })
            .collect()
    }

    fn model(len: usize, classes: usize) -> Model {
        Model::init(
            ModelSpec::new(len, classes),
            labels(classes),
            &mut rng_from_seed(1),
        )
        .unwrap()
    }

    #[test]
    fn zero_head_gives_uniform_logits_and_ln_c_loss() {
        let mut m = model(64, 3);
        m.tensor_mut("head.w")
            .unwrap()
            .iter_mut()
            .for_each(|v| *v = 0.0);
        let fs = frames(4, 64);
        let refs: Vec<&IqFrame> = fs.iter().collect();
        for row in m.forward(&refs, Execution::Sequential).unwrap() {
            assert!(row.iter().all(|&v| v == row[0]));
        }
        let (loss, _) = m
            .loss_and_grads(&refs, &[0, 1, 2, 0], Execution::Sequential)
            .unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicates_and_permutations() {
        let m = model(64, 4);
        let fs = frames(3, 64);
        let a = m
            .forward(&[&fs[0], &fs[1], &fs[0], &fs[2]], Execution::Parallel)
            .unwrap();
        assert_eq!(a[0], a[2]);
        let b = m
            .forward(&[&fs[2], &fs[0], &fs[1]], Execution::Sequential)
            .unwrap();
        assert_eq!(b, vec![a[3].clone(), a[0].clone(), a[1].clone()]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = model(64, 2);
        let fs = frames(2, 64);
        let short = frames(1, 32);
        assert!(m.forward(&[&short[0]], Execution::Sequential).is_err());
        assert!(m
            .loss_and_grads(&[&fs[0]], &[2], Execution::Sequential)
            .is_err());
        assert!(m
            .loss_and_grads(&[&fs[0]], &[0, 1], Execution::Sequential)
            .is_err());
        let mut bad = m.clone();
        bad.params_mut()[0] = f64::NAN;
        assert!(bad.forward(&[&fs[0]], Execution::Sequential).is_err());
    }

    #[test]
    fn parallel_gradients_match_sequential() {
        let m = model(64, 4);
        let fs = frames(40, 64);
        let refs: Vec<&IqFrame> = fs.iter().collect();
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let a = m
            .loss_and_grads(&refs, &labels, Execution::Sequential)
            .unwrap();
        let b = m
            .loss_and_grads(&refs, &labels, Execution::Parallel)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = model(64, 4);
        m.save(&path).unwrap();
        assert_eq!(Model::load(&path).unwrap(), m);
    }
}
