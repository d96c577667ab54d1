//! Symbol alphabets.
//!
//! | scheme     | mapping                                                        |
//! |------------|----------------------------------------------------------------|
//! | BPSK       | bit 0 → +1, bit 1 → -1                                         |
//! | QPSK/OQPSK | Gray, angles π/4 + kπ/2 (00 → 45°, 01 → 135°, 11 → -135°, 10 → -45°) |
//! | 8PSK       | Gray, angles kπ/4                                              |
//! | 4/8PAM     | Gray, levels (2k - (M-1)) / √((M²-1)/3); all-zero bits → lowest |
//! | 16/64QAM   | square, Gray per axis; first half of the bits picks I, second half Q |
//! | 32QAM      | 6×6 cross (corners removed), row-major binary labels, not Gray |
//! | M-FSK      | Gray tone index k; tone frequency (k - (M-1)/2) · spacing      |
//!
//! Bits are read most-significant first within each symbol. Every linear
//! alphabet is scaled to unit mean energy.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModulationScheme {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8PSK")]
    Psk8,
    #[serde(rename = "OQPSK")]
    Oqpsk,
    #[serde(rename = "2FSK")]
    Fsk2,
    #[serde(rename = "4FSK")]
    Fsk4,
    #[serde(rename = "8FSK")]
    Fsk8,
    #[serde(rename = "4PAM")]
    Pam4,
    #[serde(rename = "8PAM")]
    Pam8,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "64QAM")]
    Qam64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Psk,
    OffsetPsk,
    Fsk,
    Pam,
    Qam,
}

/// Mapped symbols, ready for pulse shaping.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseband {
    /// Linearly modulated symbols.
    Linear(Vec<Complex64>),
    /// Linear symbols whose Q component is delayed by half a symbol.
    Offset(Vec<Complex64>),
    /// FSK tone indices, rendered phase-continuously.
    Tones { tones: Vec<usize>, order: usize },
}

impl Baseband {
    pub fn symbol_count(&self) -> usize {
        match self {
            Baseband::Linear(s) | Baseband::Offset(s) => s.len(),
            Baseband::Tones { tones, .. } => tones.len(),
        }
    }
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 12] = [
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Psk8,
        ModulationScheme::Oqpsk,
        ModulationScheme::Fsk2,
        ModulationScheme::Fsk4,
        ModulationScheme::Fsk8,
        ModulationScheme::Pam4,
        ModulationScheme::Pam8,
        ModulationScheme::Qam16,
        ModulationScheme::Qam32,
        ModulationScheme::Qam64,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Bpsk => "BPSK",
            ModulationScheme::Qpsk => "QPSK",
            ModulationScheme::Psk8 => "8PSK",
            ModulationScheme::Oqpsk => "OQPSK",
            ModulationScheme::Fsk2 => "2FSK",
            ModulationScheme::Fsk4 => "4FSK",
            ModulationScheme::Fsk8 => "8FSK",
            ModulationScheme::Pam4 => "4PAM",
            ModulationScheme::Pam8 => "8PAM",
            ModulationScheme::Qam16 => "16QAM",
            ModulationScheme::Qam32 => "32QAM",
            ModulationScheme::Qam64 => "64QAM",
        }
    }

    pub fn order(self) -> usize {
        match self {
            ModulationScheme::Bpsk | ModulationScheme::Fsk2 => 2,
            ModulationScheme::Qpsk
            | ModulationScheme::Oqpsk
            | ModulationScheme::Fsk4
            | ModulationScheme::Pam4 => 4,
            ModulationScheme::Psk8 | ModulationScheme::Fsk8 | ModulationScheme::Pam8 => 8,
            ModulationScheme::Qam16 => 16,
            ModulationScheme::Qam32 => 32,
            ModulationScheme::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }

    pub fn family(self) -> Family {
        match self {
            ModulationScheme::Bpsk | ModulationScheme::Qpsk | ModulationScheme::Psk8 => Family::Psk,
            ModulationScheme::Oqpsk => Family::OffsetPsk,
            ModulationScheme::Fsk2 | ModulationScheme::Fsk4 | ModulationScheme::Fsk8 => Family::Fsk,
            ModulationScheme::Pam4 | ModulationScheme::Pam8 => Family::Pam,
            ModulationScheme::Qam16 | ModulationScheme::Qam32 | ModulationScheme::Qam64 => {
                Family::Qam
            }
        }
    }

    /// Unit-energy alphabet indexed by the bit label. `None` for FSK.
    pub fn constellation(self) -> Option<Vec<Complex64>> {
        let m = self.order();
        let points: Vec<Complex64> = match self.family() {
            Family::Fsk => return None,
            Family::Psk | Family::OffsetPsk => {
                let offset = if m == 4 { PI / 4.0 } else { 0.0 };
                (0..m)
                    .map(|label| {
                        let k = gray_position(label);
                        Complex64::from_polar(1.0, offset + 2.0 * PI * k as f64 / m as f64)
                    })
                    .collect()
            }
            Family::Pam => (0..m)
                .map(|label| Complex64::new(pam_level(gray_position(label), m), 0.0))
                .collect(),
            Family::Qam if self == ModulationScheme::Qam32 => cross32(),
            Family::Qam => {
                let side = 1usize << (self.bits_per_symbol() / 2);
                let half = self.bits_per_symbol() / 2;
                (0..m)
                    .map(|label| {
                        let i = gray_position(label >> half);
                        let q = gray_position(label & (side - 1));
                        Complex64::new(pam_level(i, side), pam_level(q, side))
                    })
                    .collect()
            }
        };
        let mean: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
        let scale = mean.sqrt().recip();
        Some(points.into_iter().map(|p| p * scale).collect())
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownScheme { name: s.into() })
    }
}

/// Position on the Gray-ordered axis whose code is `label`.
fn gray_position(label: usize) -> usize {
    let mut pos = label;
    let mut shift = label >> 1;
    while shift != 0 {
        pos ^= shift;
        shift >>= 1;
    }
    pos
}

/// Unnormalized odd-integer level for axis position `k` of `m`.
fn pam_level(k: usize, m: usize) -> f64 {
    2.0 * k as f64 - (m as f64 - 1.0)
}

fn cross32() -> Vec<Complex64> {
    let levels = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
    let mut pts = Vec::with_capacity(32);
    for &q in levels.iter().rev() {
        for &i in &levels {
            if f64::abs(i) == 5.0 && f64::abs(q) == 5.0 {
                continue;
            }
            pts.push(Complex64::new(i, q));
        }
    }
    pts
}

/// Maps a bit sequence (values 0/1) onto symbols of `scheme`.
pub fn map_symbols(bits: &[u8], scheme: ModulationScheme) -> Result<Baseband> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::Sizing(format!(
            "{} bits do not divide into {}-bit {} symbols",
            bits.len(),
            k,
            scheme
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidParameter(format!("bit value {b}")));
    }
    let labels = bits
        .chunks_exact(k)
        .map(|c| c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize));
    Ok(match scheme.constellation() {
        None => Baseband::Tones {
            tones: labels.map(gray_position).collect(),
            order: scheme.order(),
        },
        Some(alphabet) => {
            let syms = labels.map(|l| alphabet[l]).collect();
            if scheme.family() == Family::OffsetPsk {
                Baseband::Offset(syms)
            } else {
                Baseband::Linear(syms)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn bpsk_antipodal() {
        let Baseband::Linear(s) = map_symbols(&[0, 1], ModulationScheme::Bpsk).unwrap() else {
            panic!()
        };
        assert!(close(s[0], Complex64::new(1.0, 0.0)));
        assert!(close(s[1], Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn qpsk_gray_angles() {
        let Baseband::Linear(s) =
            map_symbols(&[0, 0, 0, 1, 1, 1, 1, 0], ModulationScheme::Qpsk).unwrap()
        else {
            panic!()
        };
        let deg: Vec<f64> = s.iter().map(|c| c.arg().to_degrees()).collect();
        for (got, want) in deg.iter().zip([45.0, 135.0, -135.0, -45.0]) {
            assert!((got - want).abs() < 1e-9, "{deg:?}");
        }
        assert!(s.iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pam4_zero_bits_is_lowest_level() {
        // Independent enumeration: {±1, ±3}/√5.
        let alphabet = [-3.0, -1.0, 1.0, 3.0].map(|v: f64| v / 5f64.sqrt());
        let mean: f64 = alphabet.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!((mean - 1.0).abs() < 1e-12);
        let Baseband::Linear(s) = map_symbols(&[0; 8], ModulationScheme::Pam4).unwrap() else {
            panic!()
        };
        assert_eq!(s.len(), 4);
        assert!(s
            .iter()
            .all(|c| close(*c, Complex64::new(alphabet[0], 0.0))));
    }

    #[test]
    fn alphabets_have_unit_energy_and_distinct_points() {
        for scheme in ModulationScheme::ALL {
            let Some(points) = scheme.constellation() else {
                assert_eq!(scheme.family(), Family::Fsk);
                continue;
            };
            assert_eq!(points.len(), scheme.order());
            let mean = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{scheme}: {mean}");
            for (i, a) in points.iter().enumerate() {
                for b in &points[i + 1..] {
                    assert!((a - b).norm() > 1e-6, "{scheme} has duplicate points");
                }
            }
        }
    }

    #[test]
    fn gray_neighbors_differ_by_one_bit() {
        for scheme in [ModulationScheme::Psk8, ModulationScheme::Pam8] {
            let pts = scheme.constellation().unwrap();
            let m = pts.len();
            let mut by_pos: Vec<(f64, usize)> = pts
                .iter()
                .enumerate()
                .map(|(label, p)| {
                    (
                        if scheme == ModulationScheme::Pam8 {
                            p.re
                        } else {
                            p.arg().rem_euclid(2.0 * PI)
                        },
                        label,
                    )
                })
                .collect();
            by_pos.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in by_pos.windows(2) {
                assert_eq!((w[0].1 ^ w[1].1).count_ones(), 1);
            }
            if scheme == ModulationScheme::Psk8 {
                assert_eq!((by_pos[0].1 ^ by_pos[m - 1].1).count_ones(), 1);
            }
        }
    }

    #[test]
    fn fsk_tones_and_offset_variant() {
        match map_symbols(&[1, 1, 0, 1], ModulationScheme::Fsk4).unwrap() {
            Baseband::Tones { tones, order } => {
                assert_eq!(order, 4);
                assert_eq!(tones, vec![2, 1]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            map_symbols(&[0, 1], ModulationScheme::Oqpsk).unwrap(),
            Baseband::Offset(_)
        ));
    }

    #[test]
    fn sizing_and_name_errors() {
        assert!(matches!(
            map_symbols(&[0, 1, 1], ModulationScheme::Qpsk),
            Err(Error::Sizing(_))
        ));
        assert!(matches!(
            "GMSK".parse::<ModulationScheme>(),
            Err(Error::UnknownScheme { .. })
        ));
        assert_eq!(
            "8psk".parse::<ModulationScheme>().unwrap(),
            ModulationScheme::Psk8
        );
    }
}
