//! Single-level periodic DWT/IDWT in one and two dimensions.
//!
//! Alignment: analysis is `ca[n] = Σ_f x[(2n - f) mod N] · lo_d[f]` (even-index
//! downsampling, filter anchored at index 0). Synthesis places
//! `ca[n] · lo_r[k] + cd[n] · hi_r[k]` at index `(2n + k - (F - 1)) mod N`,
//! which is the transpose of analysis for orthogonal bases.
//!
//! The 2-D level treats a frame as a 2×L image. The time axis is filtered
//! first, then the 2-sample row axis, where filters longer than 2 wrap onto
//! the two rows. Band naming:
//!
//! | band | row axis | time axis |
//! |------|----------|-----------|
//! | CA   | low      | low       |
//! | CH   | high     | low       |
//! | CV   | low      | high      |
//! | CD   | high     | high      |

use super::basis::WaveletBasis;
use crate::error::{Error, Result};

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

fn analysis_into(x: &[f64], b: &WaveletBasis, ca: &mut [f64], cd: &mut [f64]) {
    let n = x.len();
    let f_len = b.lo_d.len();
    for (k, (a, d)) in ca.iter_mut().zip(cd.iter_mut()).enumerate() {
        let base = 2 * k as isize;
        let (mut sa, mut sd) = (0.0, 0.0);
        if f_len <= 2 * k + 1 {
            // no wrap
            for f in 0..f_len {
                let v = x[(base - f as isize) as usize];
                sa += v * b.lo_d[f];
                sd += v * b.hi_d[f];
            }
        } else {
            for f in 0..f_len {
                let v = x[wrap(base - f as isize, n)];
                sa += v * b.lo_d[f];
                sd += v * b.hi_d[f];
            }
        }
        *a = sa;
        *d = sd;
    }
}

fn synthesis_into(ca: &[f64], cd: &[f64], b: &WaveletBasis, out: &mut [f64]) {
    let n = out.len();
    let f_len = b.lo_r.len() as isize;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, (&a, &d)) in ca.iter().zip(cd).enumerate() {
        let base = 2 * k as isize - (f_len - 1);
        for (j, (&lr, &hr)) in b.lo_r.iter().zip(&b.hi_r).enumerate() {
            out[wrap(base + j as isize, n)] += a * lr + d * hr;
        }
    }
}

/// One analysis level of the periodic 1-D DWT.
pub fn dwt1(x: &[f64], basis: &WaveletBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 2 || !x.len().is_multiple_of(2) {
        return Err(Error::Sizing(format!(
            "dwt1 needs an even length >= 2, got {}",
            x.len()
        )));
    }
    let half = x.len() / 2;
    let mut ca = vec![0.0; half];
    let mut cd = vec![0.0; half];
    analysis_into(x, basis, &mut ca, &mut cd);
    Ok((ca, cd))
}

/// Inverse of [`dwt1`].
pub fn idwt1(ca: &[f64], cd: &[f64], basis: &WaveletBasis) -> Result<Vec<f64>> {
    if ca.len() != cd.len() {
        return Err(Error::Sizing(format!(
            "idwt1 band lengths differ: {} vs {}",
            ca.len(),
            cd.len()
        )));
    }
    if ca.is_empty() {
        return Err(Error::Sizing("idwt1 on empty bands".into()));
    }
    let mut out = vec![0.0; 2 * ca.len()];
    synthesis_into(ca, cd, basis, &mut out);
    Ok(out)
}

/// The four one-level 2-D bands, each of length L/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Dwt2Bands {
    pub ca: Vec<f64>,
    pub ch: Vec<f64>,
    pub cv: Vec<f64>,
    pub cd: Vec<f64>,
}

/// One analysis level of the separable 2-D DWT over a 2×L frame.
pub fn dwt2(rows: &[Vec<f64>], basis: &WaveletBasis) -> Result<Dwt2Bands> {
    if rows.len() != 2 {
        return Err(Error::Sizing(format!(
            "dwt2 needs exactly 2 rows, got {}",
            rows.len()
        )));
    }
    if rows[0].len() != rows[1].len() {
        return Err(Error::Sizing("dwt2 rows differ in length".into()));
    }
    let (lo0, hi0) = dwt1(&rows[0], basis)?;
    let (lo1, hi1) = dwt1(&rows[1], basis)?;
    let half = lo0.len();
    let mut bands = Dwt2Bands {
        ca: vec![0.0; half],
        ch: vec![0.0; half],
        cv: vec![0.0; half],
        cd: vec![0.0; half],
    };
    let (mut a, mut d) = ([0.0], [0.0]);
    for t in 0..half {
        analysis_into(&[lo0[t], lo1[t]], basis, &mut a, &mut d);
        bands.ca[t] = a[0];
        bands.ch[t] = d[0];
        analysis_into(&[hi0[t], hi1[t]], basis, &mut a, &mut d);
        bands.cv[t] = a[0];
        bands.cd[t] = d[0];
    }
    Ok(bands)
}

/// Inverse of [`dwt2`]; returns the two rows.
pub fn idwt2(bands: &Dwt2Bands, basis: &WaveletBasis) -> Result<[Vec<f64>; 2]> {
    let half = bands.ca.len();
    if [&bands.ch, &bands.cv, &bands.cd]
        .iter()
        .any(|b| b.len() != half)
    {
        return Err(Error::Sizing("idwt2 band lengths differ".into()));
    }
    if half == 0 {
        return Err(Error::Sizing("idwt2 on empty bands".into()));
    }
    let mut lo = [vec![0.0; half], vec![0.0; half]];
    let mut hi = [vec![0.0; half], vec![0.0; half]];
    let mut col = [0.0; 2];
    for t in 0..half {
        synthesis_into(&[bands.ca[t]], &[bands.ch[t]], basis, &mut col);
        lo[0][t] = col[0];
        lo[1][t] = col[1];
        synthesis_into(&[bands.cv[t]], &[bands.cd[t]], basis, &mut col);
        hi[0][t] = col[0];
        hi[1][t] = col[1];
    }
    Ok([idwt1(&lo[0], &hi[0], basis)?, idwt1(&lo[1], &hi[1], basis)?])
}
