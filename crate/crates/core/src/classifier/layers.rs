//! 1-D convolution, ReLU and pooling kernels over channel-major buffers
//! (`[channel][time]`, row-major).
//!
//! The convolution kernels are compiled twice, once for the baseline target
//! and once with AVX, and picked at runtime. FMA stays off so both builds
//! round identically.

use std::borrow::Cow;

macro_rules! dispatch {
    ($self:ident . $imp:ident / $avx:ident ( $($arg:expr),* )) => {{
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: AVX support was just checked.
            return unsafe { $self.$avx($($arg),*) };
        }
        $self.$imp($($arg),*)
    }};
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Conv {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv {
    pub fn out_len(&self, tin: usize) -> usize {
        (tin + 2 * self.pad - self.k) / self.stride + 1
    }

    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * self.k
    }

    /// Output positions `t` with `0 <= t·stride + j - pad < tin`.
    #[inline(always)]
    fn valid(&self, j: usize, tin: usize, tout: usize) -> (usize, usize) {
        let s = self.stride;
        let lo = if self.pad > j {
            (self.pad - j).div_ceil(s)
        } else {
            0
        };
        let hi = if tin + self.pad > j {
            (tin + self.pad - j).div_ceil(s).min(tout)
        } else {
            0
        };
        (lo, hi.max(lo))
    }

    /// Splits each channel into `stride` phases, `ph[r][c][m] = x[c][m·stride + r]`,
    /// so strided taps become contiguous runs. Returns the buffer and phase length.
    #[inline(always)]
    fn phases<'a>(&self, x: &'a [f64], tin: usize) -> (Cow<'a, [f64]>, usize) {
        let s = self.stride;
        if s == 1 {
            return (Cow::Borrowed(x), tin);
        }
        let plen = tin.div_ceil(s);
        let mut ph = vec![0.0; s * self.cin * plen];
        for c in 0..self.cin {
            for (t, &v) in x[c * tin..(c + 1) * tin].iter().enumerate() {
                ph[((t % s) * self.cin + c) * plen + t / s] = v;
            }
        }
        (Cow::Owned(ph), plen)
    }

    /// Phase index and run start (within the phase) of tap `j` at output `lo`.
    #[inline(always)]
    fn tap(&self, j: usize, lo: usize) -> (usize, usize) {
        let d = (lo * self.stride + j) - self.pad;
        (d % self.stride, d / self.stride)
    }

    pub fn forward(&self, input: &[f64], tin: usize, w: &[f64], b: &[f64], out: &mut [f64]) {
        dispatch!(self.forward_impl / forward_avx(input, tin, w, b, out))
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx")]
    unsafe fn forward_avx(&self, input: &[f64], tin: usize, w: &[f64], b: &[f64], out: &mut [f64]) {
        self.forward_impl(input, tin, w, b, out)
    }

    #[inline(always)]
    fn forward_impl(&self, input: &[f64], tin: usize, w: &[f64], b: &[f64], out: &mut [f64]) {
        let tout = self.out_len(tin);
        debug_assert_eq!(input.len(), self.cin * tin);
        debug_assert_eq!(out.len(), self.cout * tout);
        let (ph, plen) = self.phases(input, tin);
        for o in 0..self.cout {
            let row = &mut out[o * tout..(o + 1) * tout];
            row.iter_mut().for_each(|v| *v = b[o]);
            for c in 0..self.cin {
                for j in 0..self.k {
                    let (lo, hi) = self.valid(j, tin, tout);
                    if lo >= hi {
                        continue;
                    }
                    let wv = w[(o * self.cin + c) * self.k + j];
                    let (r, m) = self.tap(j, lo);
                    let base = (r * self.cin + c) * plen + m;
                    let src = &ph[base..base + (hi - lo)];
                    for (y, &xv) in row[lo..hi].iter_mut().zip(src) {
                        *y += wv * xv;
                    }
                }
            }
        }
    }

    /// Accumulates weight/bias gradients and, when `din` is given, writes
    /// (overwrites) the input gradient.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        input: &[f64],
        tin: usize,
        w: &[f64],
        dout: &[f64],
        dw: &mut [f64],
        db: &mut [f64],
        din: Option<&mut [f64]>,
    ) {
        dispatch!(self.backward_impl / backward_avx(input, tin, w, dout, dw, db, din))
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx")]
    #[allow(clippy::too_many_arguments)]
    unsafe fn backward_avx(
        &self,
        input: &[f64],
        tin: usize,
        w: &[f64],
        dout: &[f64],
        dw: &mut [f64],
        db: &mut [f64],
        din: Option<&mut [f64]>,
    ) {
        self.backward_impl(input, tin, w, dout, dw, db, din)
    }

    #[inline(always)]
    #[allow(clippy::too_many_arguments)]
    fn backward_impl(
        &self,
        input: &[f64],
        tin: usize,
        w: &[f64],
        dout: &[f64],
        dw: &mut [f64],
        db: &mut [f64],
        din: Option<&mut [f64]>,
    ) {
        let tout = self.out_len(tin);
        let (ph, plen) = self.phases(input, tin);
        let mut dph = if din.is_some() {
            vec![0.0; ph.len()]
        } else {
            Vec::new()
        };
        let s = self.stride;
        for o in 0..self.cout {
            let g = &dout[o * tout..(o + 1) * tout];
            db[o] += g.iter().sum::<f64>();
            for c in 0..self.cin {
                for j in 0..self.k {
                    let (lo, hi) = self.valid(j, tin, tout);
                    if lo >= hi {
                        continue;
                    }
                    let widx = (o * self.cin + c) * self.k + j;
                    let (r, m) = self.tap(j, lo);
                    let base = (r * self.cin + c) * plen + m;
                    let n = hi - lo;
                    let gs = &g[lo..hi];
                    dw[widx] += dot(gs, &ph[base..base + n]);
                    if !dph.is_empty() {
                        let wv = w[widx];
                        for (d, &gv) in dph[base..base + n].iter_mut().zip(gs) {
                            *d += wv * gv;
                        }
                    }
                }
            }
        }
        if let Some(d) = din {
            if s == 1 {
                d.copy_from_slice(&dph);
                return;
            }
            for c in 0..self.cin {
                for (t, v) in d[c * tin..(c + 1) * tin].iter_mut().enumerate() {
                    *v = dph[((t % s) * self.cin + c) * plen + t / s];
                }
            }
        }
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes
/// instead of serializing on one accumulator.
#[inline(always)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn relu_inplace(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Zeroes gradient entries whose forward ReLU output was not positive.
pub(crate) fn relu_backward(out: &[f64], grad: &mut [f64]) {
    for (g, &o) in grad.iter_mut().zip(out) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Non-overlapping average pooling of width `p` along time.
pub(crate) fn avg_pool(input: &[f64], channels: usize, tin: usize, p: usize, out: &mut [f64]) {
    let tout = tin / p;
    let inv = 1.0 / p as f64;
    for c in 0..channels {
        for t in 0..tout {
            let s: f64 = input[c * tin + t * p..c * tin + (t + 1) * p].iter().sum();
            out[c * tout + t] = s * inv;
        }
    }
}

pub(crate) fn avg_pool_backward(
    dout: &[f64],
    channels: usize,
    tin: usize,
    p: usize,
    din: &mut [f64],
) {
    let tout = tin / p;
    let inv = 1.0 / p as f64;
    for c in 0..channels {
        for t in 0..tout {
            let g = dout[c * tout + t] * inv;
            din[c * tin + t * p..c * tin + (t + 1) * p]
                .iter_mut()
                .for_each(|v| *v = g);
        }
    }
}
