//! Augmentation by wavelet detail replacement, plus the Flip, SegCS and
//! SegMC baselines.

mod baselines;
mod build;
mod replace;

pub use baselines::{flip, seg_cs, seg_mc, FlipAxis};
pub use build::{build_augmented_set, expected_count};
pub use replace::{augment_mw, augment_once, replace_detail, ReplaceMode};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::WaveletName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NONE")]
    None,
    #[serde(rename = "AZSR")]
    Azsr,
    #[serde(rename = "RZSR")]
    Rzsr,
    #[serde(rename = "RNSR")]
    Rnsr,
    #[serde(rename = "RNSR_MW")]
    RnsrMw,
    #[serde(rename = "FLIP")]
    Flip,
    #[serde(rename = "SEGCS")]
    SegCs,
    #[serde(rename = "SEGMC")]
    SegMc,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::None,
        Method::Azsr,
        Method::Rzsr,
        Method::Rnsr,
        Method::RnsrMw,
        Method::Flip,
        Method::SegCs,
        Method::SegMc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "NONE",
            Method::Azsr => "AZSR",
            Method::Rzsr => "RZSR",
            Method::Rnsr => "RNSR",
            Method::RnsrMw => "RNSR_MW",
            Method::Flip => "FLIP",
            Method::SegCs => "SEGCS",
            Method::SegMc => "SEGMC",
        }
    }

    /// Whether the method replaces wavelet detail bands.
    pub fn is_wavelet(self) -> bool {
        matches!(
            self,
            Method::Azsr | Method::Rzsr | Method::Rnsr | Method::RnsrMw
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(&norm))
            .ok_or_else(|| Error::Config(format!("unknown augmentation method `{s}`")))
    }
}

/// How RNSR scales its Gaussian replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// `√β · z` with `β = Σ CB_l²` and `z` i.i.d. standard normal; the
    /// expected replacement energy is `β · L₀`.
    #[default]
    Paper,
    /// Same draw, rescaled so the replacement energy equals `β` exactly.
    EnergyExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationPlan {
    pub method: Method,
    /// Number of augmentation operations (D). FLIP ignores it.
    #[serde(alias = "d")]
    pub operations: usize,
    /// Decomposition depth (E).
    #[serde(alias = "e", default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_wavelets")]
    pub wavelets: Vec<WaveletName>,
    #[serde(default)]
    pub rnsr_power_mode: PowerMode,
    /// Segment count for SEGCS/SEGMC; defaults to 3 and 2 respectively.
    #[serde(default)]
    pub seg_k: Option<usize>,
    pub seed: u64,
}

fn default_depth() -> usize {
    3
}

fn default_wavelets() -> Vec<WaveletName> {
    vec![WaveletName::Haar]
}

impl AugmentationPlan {
    pub fn new(method: Method, operations: usize, depth: usize, seed: u64) -> Self {
        AugmentationPlan {
            method,
            operations,
            depth,
            wavelets: if method == Method::RnsrMw {
                WaveletName::ALL.to_vec()
            } else {
                default_wavelets()
            },
            rnsr_power_mode: PowerMode::default(),
            seg_k: None,
            seed,
        }
    }

    pub fn none() -> Self {
        Self::new(Method::None, 0, default_depth(), 0)
    }

    pub fn with_wavelets(mut self, wavelets: Vec<WaveletName>) -> Self {
        self.wavelets = wavelets;
        self
    }

    pub fn with_power_mode(mut self, mode: PowerMode) -> Self {
        self.rnsr_power_mode = mode;
        self
    }

    pub fn with_seg_k(mut self, k: usize) -> Self {
        self.seg_k = Some(k);
        self
    }

    pub fn segments(&self) -> usize {
        self.seg_k.unwrap_or(match self.method {
            Method::SegMc => 2,
            _ => 3,
        })
    }

    pub fn replace_mode(&self) -> Option<ReplaceMode> {
        match self.method {
            Method::Azsr => Some(ReplaceMode::Azsr),
            Method::Rzsr => Some(ReplaceMode::Rzsr),
            Method::Rnsr | Method::RnsrMw => Some(ReplaceMode::Rnsr(self.rnsr_power_mode)),
            _ => None,
        }
    }

    /// Short label for tables, e.g. `RNSR(D=4,E=3,haar)`.
    pub fn label(&self) -> String {
        match self.method {
            Method::None => "NONE".into(),
            Method::Flip => "FLIP".into(),
            Method::SegCs | Method::SegMc => {
                format!("{}{}(D={})", self.method, self.segments(), self.operations)
            }
            Method::RnsrMw => format!(
                "RNSR_MW(D={},E={},w={})",
                self.operations,
                self.depth,
                self.wavelets.len()
            ),
            m => format!(
                "{m}(D={},E={},{})",
                self.operations, self.depth, self.wavelets[0]
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.method == Method::RnsrMw {
            if self.wavelets.len() < 2 {
                return bad("RNSR_MW needs at least two wavelets".into());
            }
            for (k, w) in self.wavelets.iter().enumerate() {
                if self.wavelets[..k].contains(w) {
                    return bad(format!("wavelet {w} listed twice"));
                }
            }
        } else if self.method.is_wavelet() && self.wavelets.len() != 1 {
            return bad(format!("{} takes exactly one wavelet", self.method));
        }
        if self.method.is_wavelet() && self.depth == 0 {
            return bad("depth must be at least 1".into());
        }
        if matches!(self.method, Method::SegCs | Method::SegMc) && self.segments() < 2 {
            return bad("segment count must be at least 2".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: AugmentationPlan = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }
}
