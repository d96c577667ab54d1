//! Filter tables for the supported wavelet bases.
//!
//! Only the lowpass pair (`lo_d`, `lo_r`) is embedded. The highpass filters
//! follow from the alternating-flip relations
//!
//! ```text
//! hi_d[n] = (-1)^n · lo_r[n]
//! hi_r[n] = -(-1)^n · lo_d[n]
//! ```
//!
//! which for orthogonal bases (`lo_r` = reversed `lo_d`) reduce to the
//! quadrature-mirror relation `hi_d[n] = (-1)^n · lo_d[F-1-n]`. With this sign
//! convention haar has `hi_d = [1/√2, -1/√2]`.
//!
//! `lo_d` is stored in convolution order: analysis computes
//! `ca[n] = Σ_f x[2n - f] · lo_d[f]`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveletName {
    #[serde(rename = "haar")]
    Haar,
    #[serde(rename = "db5")]
    Db5,
    #[serde(rename = "sym5")]
    Sym5,
    #[serde(rename = "coif3")]
    Coif3,
    #[serde(rename = "rbio1.1")]
    Rbio11,
}

impl WaveletName {
    pub const ALL: [WaveletName; 5] = [
        WaveletName::Haar,
        WaveletName::Db5,
        WaveletName::Sym5,
        WaveletName::Coif3,
        WaveletName::Rbio11,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WaveletName::Haar => "haar",
            WaveletName::Db5 => "db5",
            WaveletName::Sym5 => "sym5",
            WaveletName::Coif3 => "coif3",
            WaveletName::Rbio11 => "rbio1.1",
        }
    }

    fn supported_list() -> String {
        Self::ALL.map(Self::as_str).join(", ")
    }
}

impl fmt::Display for WaveletName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WaveletName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::UnknownWavelet {
                name: s.to_string(),
                supported: Self::supported_list(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisClass {
    Orthogonal,
    Biorthogonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    pub name: WaveletName,
    pub class: BasisClass,
    pub lo_d: Vec<f64>,
    pub hi_d: Vec<f64>,
    pub lo_r: Vec<f64>,
    pub hi_r: Vec<f64>,
}

impl WaveletBasis {
    pub fn filter_len(&self) -> usize {
        self.lo_d.len()
    }
}

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

const HAAR_LO_D: [f64; 2] = [H, H];

const DB5_LO_D: [f64; 10] = [
    0.0033357252854737712,
    -0.012580751999081999,
    -0.006241490212798274,
    0.07757149384004572,
    -0.032244869584638375,
    -0.24229488706638203,
    0.13842814590132074,
    0.7243085284377729,
    0.6038292697971896,
    0.16010239797419293,
];

const SYM5_LO_D: [f64; 10] = [
    0.027333068345077982,
    0.029519490925774643,
    -0.039134249302383094,
    0.1993975339773936,
    0.7234076904024206,
    0.6339789634582119,
    0.01660210576452232,
    -0.17532808990845047,
    -0.021101834024758855,
    0.019538882735286728,
];

const COIF3_LO_D: [f64; 18] = [
    -3.459977319727278e-05,
    -7.0983302506379e-05,
    0.0004662169598204029,
    0.0011175187708306303,
    -0.0025745176881367972,
    -0.009007976136730624,
    0.015880544863669452,
    0.03455502757329774,
    -0.08230192710629983,
    -0.07179982161915484,
    0.42848347637737,
    0.7937772226260872,
    0.40517690240911824,
    -0.06112339000297255,
    -0.06577191128146936,
    0.023452696142077168,
    0.007782596425672746,
    -0.003793512864380802,
];

// rbio1.1: decomposition and reconstruction lowpass filters (equal to haar).
const RBIO11_LO_D: [f64; 2] = [H, H];
const RBIO11_LO_R: [f64; 2] = [H, H];

fn build(name: WaveletName) -> WaveletBasis {
    let (class, lo_d, lo_r): (_, Vec<f64>, Vec<f64>) = match name {
        WaveletName::Haar => orthogonal(&HAAR_LO_D),
        WaveletName::Db5 => orthogonal(&DB5_LO_D),
        WaveletName::Sym5 => orthogonal(&SYM5_LO_D),
        WaveletName::Coif3 => orthogonal(&COIF3_LO_D),
        WaveletName::Rbio11 => (
            BasisClass::Biorthogonal,
            RBIO11_LO_D.to_vec(),
            RBIO11_LO_R.to_vec(),
        ),
    };
    let sign = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let hi_d = lo_r.iter().enumerate().map(|(n, &v)| sign(n) * v).collect();
    let hi_r = lo_d
        .iter()
        .enumerate()
        .map(|(n, &v)| -sign(n) * v)
        .collect();
    WaveletBasis {
        name,
        class,
        lo_d,
        hi_d,
        lo_r,
        hi_r,
    }
}

fn orthogonal(lo_d: &[f64]) -> (BasisClass, Vec<f64>, Vec<f64>) {
    let lo_r = lo_d.iter().rev().copied().collect();
    (BasisClass::Orthogonal, lo_d.to_vec(), lo_r)
}

const SUM_TOL: f64 = 1e-10;

/// Checks the filter identities a basis must satisfy before use.
pub fn validate(b: &WaveletBasis) -> Result<()> {
    let fail = |reason: String| {
        Err(Error::FilterCheck {
            name: b.name.to_string(),
            reason,
        })
    };
    let f = b.lo_d.len();
    if f == 0 || !f.is_multiple_of(2) {
        return fail(format!("tap count {f} is not even"));
    }
    if [&b.hi_d, &b.lo_r, &b.hi_r].iter().any(|v| v.len() != f) {
        return fail("filter lengths differ".into());
    }
    for (label, filt) in [("lo_d", &b.lo_d), ("lo_r", &b.lo_r)] {
        let s: f64 = filt.iter().sum();
        if (s - std::f64::consts::SQRT_2).abs() > SUM_TOL {
            return fail(format!("sum of {label} is {s}, expected √2"));
        }
    }
    if b.class == BasisClass::Orthogonal {
        let e: f64 = b.lo_d.iter().map(|v| v * v).sum();
        if (e - 1.0).abs() > SUM_TOL {
            return fail(format!("lo_d energy is {e}, expected 1"));
        }
        for n in 0..f {
            let qmf = if n % 2 == 0 { 1.0 } else { -1.0 } * b.lo_d[f - 1 - n];
            if (b.hi_d[n] - qmf).abs() > SUM_TOL {
                return fail(format!("QMF relation broken at tap {n}"));
            }
            if b.lo_r[n] != b.lo_d[f - 1 - n] {
                return fail("lo_r is not lo_d reversed".into());
            }
        }
    }
    // Biorthogonality of the even shifts: Σ_k a[k]·lo_r[k + 2m] = δ(m), where
    // a is lo_d in correlation order.
    for m in -(f as isize / 2 - 1)..=(f as isize / 2 - 1) {
        let mut acc = 0.0;
        for k in 0..f as isize {
            let j = k + 2 * m;
            if (0..f as isize).contains(&j) {
                acc += b.lo_d[f - 1 - k as usize] * b.lo_r[j as usize];
            }
        }
        let want = if m == 0 { 1.0 } else { 0.0 };
        if (acc - want).abs() > SUM_TOL {
            return fail(format!("shift-{} biorthogonality sum is {acc}", 2 * m));
        }
    }
    Ok(())
}

static TABLES: OnceLock<Vec<WaveletBasis>> = OnceLock::new();

/// Returns the validated filter quadruple for `name`.
///
/// # Panics
///
/// If an embedded table fails validation, which the unit tests rule out.
pub fn basis(name: WaveletName) -> &'static WaveletBasis {
    let all = TABLES.get_or_init(|| {
        WaveletName::ALL
            .iter()
            .map(|&n| {
                let b = build(n);
                validate(&b).unwrap_or_else(|e| panic!("{e}"));
                b
            })
            .collect()
    });
    &all[WaveletName::ALL.iter().position(|&n| n == name).unwrap()]
}

/// Looks up a basis by its string name.
pub fn basis_by_name(name: &str) -> Result<&'static WaveletBasis> {
    Ok(basis(name.parse()?))
}
