use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{Method, PowerMode};
use crate::error::{Error, Result};
use crate::frame::{IqFrame, Origin};
use crate::rng::rng_from_seed;
use crate::wavelet::{decompose, reconstruct, CoefficientSet, WaveletName};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplaceMode {
    /// All-zero replacement.
    Azsr,
    /// Element-wise multiplication by an i.i.d. uniform {0, 1} mask.
    Rzsr,
    /// Gaussian noise matched to the band energy.
    Rnsr(PowerMode),
}

impl ReplaceMode {
    fn method(self) -> Method {
        match self {
            ReplaceMode::Azsr => Method::Azsr,
            ReplaceMode::Rzsr => Method::Rzsr,
            ReplaceMode::Rnsr(_) => Method::Rnsr,
        }
    }
}

/// Returns a copy of `coeffs` with detail band `l` replaced.
pub fn replace_detail<R: Rng + ?Sized>(
    coeffs: &CoefficientSet,
    l: usize,
    mode: ReplaceMode,
    rng: &mut R,
) -> Result<CoefficientSet> {
    if l >= coeffs.details.len() {
        return Err(Error::InvalidParameter(format!(
            "detail index {l} out of range 0..{}",
            coeffs.details.len()
        )));
    }
    let mut out = coeffs.clone();
    let band = &mut out.details[l];
    match mode {
        ReplaceMode::Azsr => band.iter_mut().for_each(|v| *v = 0.0),
        ReplaceMode::Rzsr => {
            for v in band.iter_mut() {
                if !rng.random_bool(0.5) {
                    *v = 0.0;
                }
            }
        }
        ReplaceMode::Rnsr(power) => {
            let beta: f64 = band.iter().map(|v| v * v).sum();
            let z: Vec<f64> = (0..band.len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let scale = match power {
                PowerMode::Paper => beta.sqrt(),
                PowerMode::EnergyExact => {
                    let ez: f64 = z.iter().map(|v| v * v).sum();
                    if ez > 0.0 {
                        (beta / ez).sqrt()
                    } else {
                        0.0
                    }
                }
            };
            band.iter_mut().zip(&z).for_each(|(v, z)| *v = scale * z);
        }
    }
    out.origin = Origin::Augmented {
        method: mode.method(),
        op: 0,
        index: l as u32,
        wavelet: Some(coeffs.basis),
    };
    Ok(out)
}

/// One augmentation operation: decompose once, then replace each of the
/// `E + 2` detail bands in turn (fresh randomness per band) and reconstruct.
pub fn augment_once<R: RngCore + ?Sized>(
    frame: &IqFrame,
    basis: WaveletName,
    depth: usize,
    mode: ReplaceMode,
    rng: &mut R,
) -> Result<Vec<IqFrame>> {
    let coeffs = decompose(frame, basis, depth)?;
    (0..coeffs.details.len())
        .map(|l| {
            let mut band_rng = rng_from_seed(rng.next_u64());
            reconstruct(&replace_detail(&coeffs, l, mode, &mut band_rng)?)
        })
        .collect()
}

/// RNSR under each wavelet in `wavelets`; returns `w · (E + 2)` frames,
/// wavelet-major.
pub fn augment_mw<R: RngCore + ?Sized>(
    frame: &IqFrame,
    wavelets: &[WaveletName],
    depth: usize,
    power: PowerMode,
    rng: &mut R,
) -> Result<Vec<IqFrame>> {
    if wavelets.len() < 2 {
        return Err(Error::InvalidParameter(
            "mixed-wavelet augmentation needs at least two wavelets".into(),
        ));
    }
    for (k, w) in wavelets.iter().enumerate() {
        if wavelets[..k].contains(w) {
            return Err(Error::InvalidParameter(format!("wavelet {w} listed twice")));
        }
    }
    let mut out = Vec::with_capacity(wavelets.len() * (depth + 2));
    for &w in wavelets {
        let mut wavelet_rng = rng_from_seed(rng.next_u64());
        for mut f in augment_once(frame, w, depth, ReplaceMode::Rnsr(power), &mut wavelet_rng)? {
            if let Origin::Augmented { method, .. } = &mut f.origin {
                *method = Method::RnsrMw;
            }
            out.push(f);
        }
    }
    Ok(out)
}
