//! Residual 1-D CNN over a standardized 2×L frame, with hand-written
//! backpropagation over a flat parameter vector.
//!
//! ```text
//! stem   conv k7 s2 (2→C1) + ReLU, avg-pool 4
//! block1 conv k3 (C1→C1) + ReLU, conv k3 (C1→C1), + identity, ReLU
//! block2 conv k3 s2 (C1→C2) + ReLU, conv k3 (C2→C2), + conv 1×1 s2, ReLU
//! head   global average pool, linear C2→classes
//! ```

use serde::{Deserialize, Serialize};

use super::layers::{avg_pool, avg_pool_backward, relu_backward, relu_inplace, Conv};
use crate::error::{Error, Result};

const STEM_KERNEL: usize = 7;
const POOL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub frame_len: usize,
    pub classes: usize,
    pub stem_width: usize,
    pub width: usize,
}

impl ModelSpec {
    pub fn new(frame_len: usize, classes: usize) -> Self {
        ModelSpec {
            frame_len,
            classes,
            stem_width: 16,
            width: 32,
        }
    }

    pub fn with_widths(mut self, stem_width: usize, width: usize) -> Self {
        self.stem_width = stem_width;
        self.width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 16 || !self.frame_len.is_multiple_of(16) {
            return Err(Error::Sizing(format!(
                "classifier needs a frame length that is a positive multiple of 16, got {}",
                self.frame_len
            )));
        }
        if self.classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "classifier needs at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.stem_width == 0 || self.width == 0 {
            return Err(Error::InvalidParameter(
                "channel widths must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn shapes(&self) -> Shapes {
        let (c1, c2) = (self.stem_width, self.width);
        let stem = Conv {
            cin: 2,
            cout: c1,
            k: STEM_KERNEL,
            stride: 2,
            pad: STEM_KERNEL / 2,
        };
        let t1 = stem.out_len(self.frame_len);
        let t2 = t1 / POOL;
        let b1 = Conv {
            cin: c1,
            cout: c1,
            k: 3,
            stride: 1,
            pad: 1,
        };
        let b2a = Conv {
            cin: c1,
            cout: c2,
            k: 3,
            stride: 2,
            pad: 1,
        };
        let b2b = Conv {
            cin: c2,
            cout: c2,
            k: 3,
            stride: 1,
            pad: 1,
        };
        let skip = Conv {
            cin: c1,
            cout: c2,
            k: 1,
            stride: 2,
            pad: 0,
        };
        let t3 = b2a.out_len(t2);
        Shapes {
            stem,
            b1,
            b2a,
            b2b,
            skip,
            t1,
            t2,
            t3,
        }
    }

    /// Named parameter tensors in storage order.
    pub fn tensors(&self) -> Vec<TensorInfo> {
        let s = self.shapes();
        let sizes = [
            ("stem.w", s.stem.weight_len()),
            ("stem.b", s.stem.cout),
            ("block1.conv1.w", s.b1.weight_len()),
            ("block1.conv1.b", s.b1.cout),
            ("block1.conv2.w", s.b1.weight_len()),
            ("block1.conv2.b", s.b1.cout),
            ("block2.conv1.w", s.b2a.weight_len()),
            ("block2.conv1.b", s.b2a.cout),
            ("block2.conv2.w", s.b2b.weight_len()),
            ("block2.conv2.b", s.b2b.cout),
            ("block2.skip.w", s.skip.weight_len()),
            ("block2.skip.b", s.skip.cout),
            ("head.w", self.classes * self.width),
            ("head.b", self.classes),
        ];
        let mut offset = 0;
        sizes
            .into_iter()
            .map(|(name, len)| {
                let t = TensorInfo { name, offset, len };
                offset += len;
                t
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: &'static str,
    pub offset: usize,
    pub len: usize,
}

impl TensorInfo {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }

    /// Weight tensors carry fan-in scaled initialization; biases start at zero.
    pub fn is_bias(&self) -> bool {
        self.name.ends_with(".b")
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Shapes {
    stem: Conv,
    b1: Conv,
    b2a: Conv,
    b2b: Conv,
    skip: Conv,
    t1: usize,
    t2: usize,
    t3: usize,
}

/// Borrowed views of each tensor in a flat parameter (or gradient) vector.
struct Views<T> {
    stem_w: T,
    stem_b: T,
    b1a_w: T,
    b1a_b: T,
    b1b_w: T,
    b1b_b: T,
    b2a_w: T,
    b2a_b: T,
    b2b_w: T,
    b2b_b: T,
    skip_w: T,
    skip_b: T,
    head_w: T,
    head_b: T,
}

fn split<'a>(spec: &ModelSpec, p: &'a [f64]) -> Views<&'a [f64]> {
    let t = spec.tensors();
    let v = |i: usize| &p[t[i].range()];
    Views {
        stem_w: v(0),
        stem_b: v(1),
        b1a_w: v(2),
        b1a_b: v(3),
        b1b_w: v(4),
        b1b_b: v(5),
        b2a_w: v(6),
        b2a_b: v(7),
        b2b_w: v(8),
        b2b_b: v(9),
        skip_w: v(10),
        skip_b: v(11),
        head_w: v(12),
        head_b: v(13),
    }
}

fn split_mut<'a>(spec: &ModelSpec, mut p: &'a mut [f64]) -> Views<&'a mut [f64]> {
    let mut parts = Vec::with_capacity(14);
    for t in spec.tensors() {
        let (head, rest) = p.split_at_mut(t.len);
        parts.push(head);
        p = rest;
    }
    let mut it = parts.into_iter();
    let mut next = || it.next().expect("tensor count");
    Views {
        stem_w: next(),
        stem_b: next(),
        b1a_w: next(),
        b1a_b: next(),
        b1b_w: next(),
        b1b_b: next(),
        b2a_w: next(),
        b2a_b: next(),
        b2b_w: next(),
        b2b_b: next(),
        skip_w: next(),
        skip_b: next(),
        head_w: next(),
        head_b: next(),
    }
}

/// Per-frame standardization to zero mean and unit variance over both rows.
/// A constant frame maps to all zeros.
pub fn standardize(samples: &[f32]) -> Result<Vec<f64>> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classifier input"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / n;
    let inv = if var > 1e-24 { 1.0 / var.sqrt() } else { 0.0 };
    Ok(samples
        .iter()
        .map(|&v| (f64::from(v) - mean) * inv)
        .collect())
}

/// Intermediate activations of one forward pass, all post-ReLU where a
/// ReLU applies (the backward pass recovers the mask from the sign).
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    s1: Vec<f64>,
    p: Vec<f64>,
    a1: Vec<f64>,
    o1: Vec<f64>,
    a2: Vec<f64>,
    o2: Vec<f64>,
    g: Vec<f64>,
    pub logits: Vec<f64>,
}

impl Trace {
    fn new(spec: &ModelSpec) -> Self {
        let s = spec.shapes();
        let (c1, c2) = (spec.stem_width, spec.width);
        Trace {
            s1: vec![0.0; c1 * s.t1],
            p: vec![0.0; c1 * s.t2],
            a1: vec![0.0; c1 * s.t2],
            o1: vec![0.0; c1 * s.t2],
            a2: vec![0.0; c2 * s.t3],
            o2: vec![0.0; c2 * s.t3],
            g: vec![0.0; c2],
            logits: vec![0.0; spec.classes],
        }
    }

    /// Sign pattern of every ReLU output; used to detect finite-difference
    /// steps that cross a kink.
    pub(crate) fn relu_pattern(&self) -> Vec<bool> {
        [&self.s1, &self.a1, &self.o1, &self.a2, &self.o2]
            .iter()
            .flat_map(|v| v.iter().map(|&x| x > 0.0))
            .collect()
    }
}

pub(crate) fn forward_trace(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Trace {
    let s = spec.shapes();
    let w = split(spec, params);
    let (c1, c2) = (spec.stem_width, spec.width);
    let mut tr = Trace::new(spec);

    s.stem
        .forward(x, spec.frame_len, w.stem_w, w.stem_b, &mut tr.s1);
    relu_inplace(&mut tr.s1);
    avg_pool(&tr.s1, c1, s.t1, POOL, &mut tr.p);

    s.b1.forward(&tr.p, s.t2, w.b1a_w, w.b1a_b, &mut tr.a1);
    relu_inplace(&mut tr.a1);
    s.b1.forward(&tr.a1, s.t2, w.b1b_w, w.b1b_b, &mut tr.o1);
    for (o, &p) in tr.o1.iter_mut().zip(&tr.p) {
        *o += p;
    }
    relu_inplace(&mut tr.o1);

    s.b2a.forward(&tr.o1, s.t2, w.b2a_w, w.b2a_b, &mut tr.a2);
    relu_inplace(&mut tr.a2);
    s.b2b.forward(&tr.a2, s.t3, w.b2b_w, w.b2b_b, &mut tr.o2);
    let mut sc = vec![0.0; c2 * s.t3];
    s.skip.forward(&tr.o1, s.t2, w.skip_w, w.skip_b, &mut sc);
    for (o, v) in tr.o2.iter_mut().zip(sc) {
        *o += v;
    }
    relu_inplace(&mut tr.o2);

    let inv = 1.0 / s.t3 as f64;
    for c in 0..c2 {
        tr.g[c] = tr.o2[c * s.t3..(c + 1) * s.t3].iter().sum::<f64>() * inv;
    }
    for k in 0..spec.classes {
        let row = &w.head_w[k * c2..(k + 1) * c2];
        tr.logits[k] = w.head_b[k] + row.iter().zip(&tr.g).map(|(a, b)| a * b).sum::<f64>();
    }
    tr
}

/// Softmax cross-entropy of one logit row; returns (loss, dloss/dlogits).
pub(crate) fn softmax_xent(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + m - logits[label];
    let mut d: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    d[label] -= 1.0;
    (loss, d)
}

/// Accumulates `scale · dL/dθ` for one traced sample into `grad`.
#[allow(clippy::needless_range_loop)]
pub(crate) fn backward(
    spec: &ModelSpec,
    params: &[f64],
    x: &[f64],
    tr: &Trace,
    dlogits: &[f64],
    scale: f64,
    grad: &mut [f64],
) {
    let s = spec.shapes();
    let w = split(spec, params);
    let gv = split_mut(spec, grad);
    let (c1, c2) = (spec.stem_width, spec.width);

    let dz: Vec<f64> = dlogits.iter().map(|d| d * scale).collect();
    let mut dg = vec![0.0; c2];
    for k in 0..spec.classes {
        gv.head_b[k] += dz[k];
        for c in 0..c2 {
            gv.head_w[k * c2 + c] += dz[k] * tr.g[c];
            dg[c] += dz[k] * w.head_w[k * c2 + c];
        }
    }

    let inv = 1.0 / s.t3 as f64;
    let mut do2 = vec![0.0; c2 * s.t3];
    for c in 0..c2 {
        do2[c * s.t3..(c + 1) * s.t3]
            .iter_mut()
            .for_each(|v| *v = dg[c] * inv);
    }
    relu_backward(&tr.o2, &mut do2);

    let mut da2 = vec![0.0; c2 * s.t3];
    s.b2b.backward(
        &tr.a2,
        s.t3,
        w.b2b_w,
        &do2,
        gv.b2b_w,
        gv.b2b_b,
        Some(&mut da2),
    );
    relu_backward(&tr.a2, &mut da2);
    let mut do1 = vec![0.0; c1 * s.t2];
    s.b2a.backward(
        &tr.o1,
        s.t2,
        w.b2a_w,
        &da2,
        gv.b2a_w,
        gv.b2a_b,
        Some(&mut do1),
    );
    let mut dskip = vec![0.0; c1 * s.t2];
    s.skip.backward(
        &tr.o1,
        s.t2,
        w.skip_w,
        &do2,
        gv.skip_w,
        gv.skip_b,
        Some(&mut dskip),
    );
    for (a, b) in do1.iter_mut().zip(&dskip) {
        *a += b;
    }
    relu_backward(&tr.o1, &mut do1);

    let mut da1 = vec![0.0; c1 * s.t2];
    s.b1.backward(
        &tr.a1,
        s.t2,
        w.b1b_w,
        &do1,
        gv.b1b_w,
        gv.b1b_b,
        Some(&mut da1),
    );
    relu_backward(&tr.a1, &mut da1);
    let mut dp = vec![0.0; c1 * s.t2];
    s.b1.backward(
        &tr.p,
        s.t2,
        w.b1a_w,
        &da1,
        gv.b1a_w,
        gv.b1a_b,
        Some(&mut dp),
    );
    for (a, b) in dp.iter_mut().zip(&do1) {
        *a += b;
    }

    let mut ds1 = vec![0.0; c1 * s.t1];
    avg_pool_backward(&dp, c1, s.t1, POOL, &mut ds1);
    relu_backward(&tr.s1, &mut ds1);
    s.stem.backward(
        x,
        spec.frame_len,
        w.stem_w,
        &ds1,
        gv.stem_w,
        gv.stem_b,
        None,
    );
}
