use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::modulation::Baseband;
use crate::error::{Error, Result};
use crate::frame::IqFrame;

/// Frequency/phase impairment and target SNR for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Normalized frequency offset in cycles/sample, within [-0.2, 0.2].
    pub f0: f64,
    /// Phase offset in radians, within [0, 2π).
    pub theta: f64,
    /// Target SNR in dB; `f64::INFINITY` disables noise.
    pub snr_db: f64,
}

impl ChannelSpec {
    pub fn new(f0: f64, theta: f64, snr_db: f64) -> Result<Self> {
        if !(-0.2..=0.2).contains(&f0) {
            return Err(Error::InvalidParameter(format!(
                "f0 = {f0} outside [-0.2, 0.2]"
            )));
        }
        if !(0.0..2.0 * PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} outside [0, 2π)"
            )));
        }
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("snr = {snr_db} dB")));
        }
        Ok(ChannelSpec { f0, theta, snr_db })
    }

    /// Total noise variance per complex sample for a clean signal of `power`.
    pub fn noise_variance(&self, power: f64) -> f64 {
        power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Settings for rendering FSK tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    pub sps: usize,
    pub len: usize,
    /// Spacing between adjacent FSK tones in cycles/sample.
    pub fsk_spacing: f64,
}

impl ShapeParams {
    pub fn new(sps: usize, len: usize) -> Self {
        ShapeParams {
            sps,
            len,
            fsk_spacing: 1.0 / (2.0 * sps as f64),
        }
    }
}

/// Symbols required to fill `len` settled samples.
pub fn symbols_needed(baseband_offset: bool, sps: usize, len: usize, taps: usize) -> usize {
    let extra = usize::from(baseband_offset);
    (len + taps - 1).div_ceil(sps) + extra
}

fn upsample_filter(
    symbols: impl Iterator<Item = f64>,
    taps: &[f64],
    sps: usize,
    n: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; n * sps + taps.len() - 1];
    for (k, s) in symbols.enumerate() {
        if s == 0.0 {
            continue;
        }
        let base = k * sps;
        for (j, &h) in taps.iter().enumerate() {
            out[base + j] += s * h;
        }
    }
    out
}

/// Renders the clean complex baseband: pulse shaping (linear families) or
/// phase-continuous tones (FSK), centered crop to `len`, then rotation by
/// `exp(j(2π·f0·n + θ))`.
pub(crate) fn render(
    baseband: &Baseband,
    taps: &[f64],
    params: &ShapeParams,
    channel: &ChannelSpec,
) -> Result<Vec<Complex64>> {
    let ShapeParams { sps, len, .. } = *params;
    if sps == 0 || len == 0 {
        return Err(Error::InvalidParameter(
            "sps and len must be positive".into(),
        ));
    }
    let n = baseband.symbol_count();
    let short = |need: usize| {
        Error::Sizing(format!(
            "{n} symbols cannot fill {len} samples at {sps} samples/symbol (need {need})"
        ))
    };
    let mut samples: Vec<Complex64> = match baseband {
        Baseband::Linear(syms) | Baseband::Offset(syms) => {
            let offset = matches!(baseband, Baseband::Offset(_));
            let need = symbols_needed(offset, sps, len, taps.len());
            if n < need {
                return Err(short(need));
            }
            let i = upsample_filter(syms.iter().map(|s| s.re), taps, sps, n);
            let q = upsample_filter(syms.iter().map(|s| s.im), taps, sps, n);
            let start = (i.len() - len) / 2;
            let q_start = if offset { start - sps / 2 } else { start };
            (0..len)
                .map(|k| Complex64::new(i[start + k], q[q_start + k]))
                .collect()
        }
        Baseband::Tones { tones, order } => {
            if n * sps < len {
                return Err(short(len.div_ceil(sps)));
            }
            let center = (*order as f64 - 1.0) / 2.0;
            let start = (n * sps - len) / 2;
            let mut phase = 0.0f64;
            let mut out = Vec::with_capacity(len);
            for m in 0..start + len {
                if m >= start {
                    out.push(Complex64::from_polar(1.0, phase));
                }
                let freq = (tones[m / sps] as f64 - center) * params.fsk_spacing;
                phase = (phase + 2.0 * PI * freq).rem_euclid(2.0 * PI);
            }
            out
        }
    };
    for (k, s) in samples.iter_mut().enumerate() {
        *s *= Complex64::from_polar(1.0, 2.0 * PI * channel.f0 * k as f64 + channel.theta);
    }
    Ok(samples)
}

fn to_frame(samples: &[Complex64], label: u16, snr_db: i32) -> Result<IqFrame> {
    let i: Vec<f32> = samples.iter().map(|c| c.re as f32).collect();
    let q: Vec<f32> = samples.iter().map(|c| c.im as f32).collect();
    IqFrame::new(&i, &q, label, snr_db)
}

/// Pulse-shapes and rotates `baseband`, returning a noiseless frame.
pub fn shape_and_impair(
    baseband: &Baseband,
    taps: &[f64],
    params: &ShapeParams,
    channel: &ChannelSpec,
) -> Result<IqFrame> {
    let samples = render(baseband, taps, params, channel)?;
    to_frame(&samples, 0, 0)
}

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / samples.len().max(1) as f64
}

/// Adds complex white Gaussian noise in place, calibrated against the
/// empirical power of `samples`. Each component gets variance σ²/2.
pub(crate) fn add_awgn_complex<R: Rng + ?Sized>(
    samples: &mut [Complex64],
    snr_db: f64,
    rng: &mut R,
) {
    if snr_db == f64::INFINITY {
        return;
    }
    let sigma2 = mean_power(samples) / 10f64.powf(snr_db / 10.0);
    let std = (sigma2 / 2.0).sqrt();
    for s in samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re * std, im * std);
    }
}

/// Adds AWGN at `snr_db` relative to the frame's own mean power.
/// `f64::INFINITY` returns the frame unchanged.
pub fn add_awgn<R: Rng + ?Sized>(frame: &IqFrame, snr_db: f64, rng: &mut R) -> Result<IqFrame> {
    if frame.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frame passed to add_awgn"));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("snr is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    let mut samples: Vec<Complex64> = frame
        .i()
        .iter()
        .zip(frame.q())
        .map(|(&i, &q)| Complex64::new(i.into(), q.into()))
        .collect();
    add_awgn_complex(&mut samples, snr_db, rng);
    let mut out = to_frame(&samples, frame.label, frame.snr_db)?;
    out.origin = frame.origin;
    Ok(out)
}
