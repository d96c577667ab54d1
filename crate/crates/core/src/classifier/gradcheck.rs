//! Analytic gradients against central finite differences.

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::network::{forward_trace, softmax_xent, ModelSpec};
use super::Model;
use crate::error::Result;
use crate::exec::Execution;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub spec: ModelSpec,
    pub batch: usize,
    pub samples_per_tensor: usize,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            spec: ModelSpec::new(256, 4),
            batch: 4,
            samples_per_tensor: 50,
            step: 1e-5,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorCheck {
    pub name: String,
    pub len: usize,
    pub checked: usize,
    /// Draws discarded because the ±step perturbation flipped a ReLU, which
    /// makes the difference quotient straddle a kink.
    pub kinks_skipped: usize,
    pub max_rel_error: f64,
    /// Indices (within the tensor) whose error exceeded the tolerance.
    pub offending: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }

    /// `tensor[index]` for every parameter over tolerance.
    pub fn offending(&self) -> Vec<String> {
        self.tensors
            .iter()
            .flat_map(|t| t.offending.iter().map(move |i| format!("{}[{i}]", t.name)))
            .collect()
    }
}

/// `|a − n| / max(|a|, |n|)`, with the denominator floored so gradients
/// that are zero up to rounding compare on absolute error.
fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Random model, random Gaussian batch, random labels; compares every
/// sampled parameter of every tensor (all of them when a tensor has fewer
/// than `samples_per_tensor` entries).
pub fn grad_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let spec = config.spec;
    spec.validate()?;
    let mut rng = rng_for(config.seed, &[]);
    let labels: Vec<String> = (0..spec.classes).map(|k| format!("C{k}")).collect();
    let mut model = Model::init(spec, labels, &mut rng)?;
    // Non-zero biases so their gradients are exercised away from init.
    for t in spec.tensors().iter().filter(|t| t.is_bias()) {
        for p in &mut model.params_mut()[t.range()] {
            *p = 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let inputs: Vec<Vec<f64>> = (0..config.batch.max(1))
        .map(|_| {
            (0..2 * spec.frame_len)
                .map(|_| rng.sample(StandardNormal))
                .collect()
        })
        .collect();
    let views: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let ys: Vec<usize> = (0..views.len())
        .map(|_| rng.random_range(0..spec.classes))
        .collect();
    let (_, grad) = model.loss_and_grads_std(&views, &ys, Execution::Sequential)?;

    let eval = |params: &[f64]| -> (f64, Vec<bool>) {
        let mut loss = 0.0;
        let mut pattern = Vec::new();
        for (x, &y) in views.iter().zip(&ys) {
            let tr = forward_trace(&spec, params, x);
            loss += softmax_xent(&tr.logits, y).0;
            pattern.extend(tr.relu_pattern());
        }
        (loss / views.len() as f64, pattern)
    };

    let mut params = model.params().to_vec();
    let mut tensors = Vec::new();
    for t in spec.tensors() {
        let want = config.samples_per_tensor.min(t.len);
        // Visit a random permutation; kink-straddling draws are replaced by
        // the next index in the permutation.
        let order = sample(&mut rng, t.len, t.len);
        let mut check = TensorCheck {
            name: t.name.to_string(),
            len: t.len,
            checked: 0,
            kinks_skipped: 0,
            max_rel_error: 0.0,
            offending: Vec::new(),
        };
        for i in order.iter() {
            if check.checked == want {
                break;
            }
            let k = t.offset + i;
            let orig = params[k];
            params[k] = orig + config.step;
            let (lp, pp) = eval(&params);
            params[k] = orig - config.step;
            let (lm, pm) = eval(&params);
            params[k] = orig;
            if pp != pm {
                check.kinks_skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * config.step);
            let err = rel_error(grad[k], numeric);
            check.checked += 1;
            check.max_rel_error = check.max_rel_error.max(err);
            if err >= config.tolerance {
                check.offending.push(i);
            }
        }
        tensors.push(check);
    }
    let max_rel_error = tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        tolerance: config.tolerance,
        max_rel_error,
        tensors,
    })
}
