use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::augment::Method;
use crate::error::{Error, Result};
use crate::wavelet::WaveletName;

/// Provenance of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Raw,
    /// `op` is the augmentation operation index (0..D). `index` is the
    /// replaced detail band for the wavelet methods, the flip combination for
    /// FLIP, and unused (0) for the segment baselines.
    Augmented {
        method: Method,
        op: u32,
        index: u32,
        wavelet: Option<WaveletName>,
    },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Raw => f.write_str("raw"),
            Origin::Augmented {
                method,
                op,
                index,
                wavelet,
            } => {
                write!(f, "{method}:d{op}:l{index}")?;
                if let Some(w) = wavelet {
                    write!(f, ":{w}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "raw" {
            return Ok(Origin::Raw);
        }
        let bad = || Error::Manifest(format!("bad origin tag `{s}`"));
        let mut parts = s.split(':');
        let method: Method = parts.next().ok_or_else(bad)?.parse()?;
        let op = parts
            .next()
            .and_then(|p| p.strip_prefix('d'))
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        let index = parts
            .next()
            .and_then(|p| p.strip_prefix('l'))
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        let wavelet = parts.next().map(str::parse).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Origin::Augmented {
            method,
            op,
            index,
            wavelet,
        })
    }
}

impl Serialize for Origin {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Origin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One labeled 2×L IQ frame. Samples are stored as 32-bit floats, I row
/// followed by Q row.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    data: Vec<f32>,
    pub label: u16,
    pub snr_db: i32,
    pub origin: Origin,
}

impl IqFrame {
    pub fn new(i: &[f32], q: &[f32], label: u16, snr_db: i32) -> Result<Self> {
        if i.len() != q.len() {
            return Err(Error::Sizing(format!(
                "I row has {} samples, Q row has {}",
                i.len(),
                q.len()
            )));
        }
        let mut data = Vec::with_capacity(2 * i.len());
        data.extend_from_slice(i);
        data.extend_from_slice(q);
        Self::from_interleaved_rows(data, label, snr_db)
    }

    /// Builds a frame from `[I row, Q row]` concatenated.
    pub fn from_interleaved_rows(data: Vec<f32>, label: u16, snr_db: i32) -> Result<Self> {
        if !data.len().is_multiple_of(2) {
            return Err(Error::Sizing(format!(
                "frame buffer of {} values is not two equal rows",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("frame samples"));
        }
        Ok(IqFrame {
            data,
            label,
            snr_db,
            origin: Origin::Raw,
        })
    }

    /// Rounds 64-bit rows to storage precision.
    pub fn from_rows_f64(rows: &[Vec<f64>; 2], label: u16, snr_db: i32) -> Result<Self> {
        if rows[0].len() != rows[1].len() {
            return Err(Error::Sizing("row lengths differ".into()));
        }
        let data = rows.iter().flatten().map(|&v| v as f32).collect();
        Self::from_interleaved_rows(data, label, snr_db)
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// Frame length L (samples per row).
    pub fn len(&self) -> usize {
        self.data.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn i(&self) -> &[f32] {
        &self.data[..self.len()]
    }

    pub fn q(&self) -> &[f32] {
        &self.data[self.len()..]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn rows_f64(&self) -> [Vec<f64>; 2] {
        [
            self.i().iter().map(|&v| f64::from(v)).collect(),
            self.q().iter().map(|&v| f64::from(v)).collect(),
        ]
    }

    /// Same label, SNR and origin with new samples.
    pub(crate) fn with_samples(&self, data: Vec<f32>) -> IqFrame {
        debug_assert_eq!(data.len(), self.data.len());
        IqFrame {
            data,
            label: self.label,
            snr_db: self.snr_db,
            origin: self.origin,
        }
    }
}
