//! Multi-level wavelet analysis and synthesis of IQ frames.
//!
//! A depth-`E` decomposition runs one 2-D level over the 2×L frame and then
//! `E - 1` 1-D levels over the successive approximation rows. The detail list
//! is ordered `[CH, CV, CD, CD_1, ..., CD_{E-1}]`.

mod basis;
mod transform;

pub use basis::{basis, basis_by_name, validate, BasisClass, WaveletBasis, WaveletName};
pub use transform::{dwt1, dwt2, idwt1, idwt2, Dwt2Bands};

use crate::error::{Error, Result};
use crate::frame::{IqFrame, Origin};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    /// Deepest approximation `CA_{E-1}`, length L / 2^E.
    pub ca: Vec<f64>,
    /// `[CH, CV, CD, CD_1, ..., CD_{E-1}]`.
    pub details: Vec<Vec<f64>>,
    pub basis: WaveletName,
    pub depth: usize,
    pub source_label: u16,
    pub source_snr: i32,
    /// Origin the reconstructed frame will carry.
    pub origin: Origin,
}

impl CoefficientSet {
    /// Frame length the set reconstructs to.
    pub fn frame_len(&self) -> usize {
        self.ca.len() << self.depth
    }

    /// Expected detail lengths for `(frame_len, depth)`.
    pub fn schedule(frame_len: usize, depth: usize) -> Vec<usize> {
        let mut lens = vec![frame_len / 2; 3];
        lens.extend((1..depth).map(|i| frame_len >> (i + 1)));
        lens
    }

    pub fn coefficient_count(&self) -> usize {
        self.ca.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        self.ca
            .iter()
            .chain(self.details.iter().flatten())
            .map(|v| v * v)
            .sum()
    }

    fn check_schedule(&self) -> Result<()> {
        let l = self.frame_len();
        if self.depth == 0 || self.details.len() != self.depth + 2 {
            return Err(Error::Sizing(format!(
                "depth {} needs {} detail bands, found {}",
                self.depth,
                self.depth + 2,
                self.details.len()
            )));
        }
        let want = Self::schedule(l, self.depth);
        let got: Vec<usize> = self.details.iter().map(Vec::len).collect();
        if want != got || self.ca.is_empty() {
            return Err(Error::Sizing(format!(
                "detail lengths {got:?} do not follow the schedule {want:?}"
            )));
        }
        Ok(())
    }
}

/// Largest valid depth for a frame of length `len`.
pub fn max_depth(len: usize) -> usize {
    if len < 2 {
        0
    } else {
        len.trailing_zeros() as usize
    }
}

pub fn check_depth(len: usize, depth: usize) -> Result<()> {
    if depth == 0 || depth > max_depth(len) {
        return Err(Error::Sizing(format!(
            "depth {depth} is invalid for frame length {len} (max {})",
            max_depth(len)
        )));
    }
    Ok(())
}

/// Decomposes 64-bit rows to depth `depth`.
pub fn decompose_rows(
    rows: &[Vec<f64>; 2],
    basis_name: WaveletName,
    depth: usize,
) -> Result<CoefficientSet> {
    check_depth(rows[0].len(), depth)?;
    let b = basis(basis_name);
    let Dwt2Bands { ca, ch, cv, cd } = dwt2(rows, b)?;
    let mut details = Vec::with_capacity(depth + 2);
    details.extend([ch, cv, cd]);
    let mut approx = ca;
    for _ in 1..depth {
        let (a, d) = dwt1(&approx, b)?;
        details.push(d);
        approx = a;
    }
    Ok(CoefficientSet {
        ca: approx,
        details,
        basis: basis_name,
        depth,
        source_label: 0,
        source_snr: 0,
        origin: Origin::Raw,
    })
}

pub fn decompose(frame: &IqFrame, basis_name: WaveletName, depth: usize) -> Result<CoefficientSet> {
    let mut set = decompose_rows(&frame.rows_f64(), basis_name, depth)?;
    set.source_label = frame.label;
    set.source_snr = frame.snr_db;
    set.origin = frame.origin;
    Ok(set)
}

/// Inverts a decomposition back to 64-bit rows.
pub fn reconstruct_rows(coeffs: &CoefficientSet) -> Result<[Vec<f64>; 2]> {
    coeffs.check_schedule()?;
    let b = basis(coeffs.basis);
    let mut approx = coeffs.ca.clone();
    for level in (1..coeffs.depth).rev() {
        approx = idwt1(&approx, &coeffs.details[level + 2], b)?;
    }
    let bands = Dwt2Bands {
        ca: approx,
        ch: coeffs.details[0].clone(),
        cv: coeffs.details[1].clone(),
        cd: coeffs.details[2].clone(),
    };
    idwt2(&bands, b)
}

pub fn reconstruct(coeffs: &CoefficientSet) -> Result<IqFrame> {
    let rows = reconstruct_rows(coeffs)?;
    Ok(
        IqFrame::from_rows_f64(&rows, coeffs.source_label, coeffs.source_snr)?
            .with_origin(coeffs.origin),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(len: usize) -> [Vec<f64>; 2] {
        let f = |k: usize| (0..len).map(move |n| ((n * 7 + k * 3) % 11) as f64 - 5.0);
        [f(0).collect(), f(1).collect()]
    }

    #[test]
    fn detail_schedule_e3() {
        let set = decompose_rows(&rows(1024), WaveletName::Haar, 3).unwrap();
        let lens: Vec<_> = set.details.iter().map(Vec::len).collect();
        assert_eq!(lens, vec![512, 512, 512, 256, 128]);
        assert_eq!(set.ca.len(), 128);
        assert_eq!(set.coefficient_count(), 2048);
    }

    #[test]
    fn depth_one_is_plain_dwt2() {
        let r = rows(64);
        let set = decompose_rows(&r, WaveletName::Sym5, 1).unwrap();
        let bands = dwt2(&r, basis(WaveletName::Sym5)).unwrap();
        assert_eq!(set.details, vec![bands.ch, bands.cv, bands.cd]);
        assert_eq!(set.ca, bands.ca);
    }

    #[test]
    fn too_deep_rejected() {
        assert!(decompose_rows(&rows(16), WaveletName::Haar, 5).is_err());
        assert!(decompose_rows(&rows(16), WaveletName::Haar, 0).is_err());
        assert!(decompose_rows(&rows(16), WaveletName::Haar, 4).is_ok());
    }

    #[test]
    fn schedule_violation_rejected() {
        let mut set = decompose_rows(&rows(64), WaveletName::Haar, 2).unwrap();
        set.details[3].pop();
        assert!(reconstruct_rows(&set).is_err());
        set.details.pop();
        assert!(reconstruct_rows(&set).is_err());
    }

    #[test]
    fn labels_carried_through() {
        let f = IqFrame::new(&[1.0; 8], &[2.0; 8], 3, 14).unwrap();
        let set = decompose(&f, WaveletName::Haar, 2).unwrap();
        let back = reconstruct(&set).unwrap();
        assert_eq!((back.label, back.snr_db), (3, 14));
        assert_eq!(back, f);
    }
}
