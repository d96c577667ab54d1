//! Labeled IQ frame synthesis: random bits → symbols → RRC shaping (or
//! phase-continuous FSK) → frequency/phase offset → AWGN.

mod channel;
mod modulation;
mod rrc;

pub use channel::{add_awgn, shape_and_impair, symbols_needed, ChannelSpec, ShapeParams};
pub use modulation::{map_symbols, Baseband, Family, ModulationScheme};
pub use rrc::rrc_taps;

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetHeader, Split};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::IqFrame;
use crate::rng::rng_for;

/// Dataset generation recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub name: String,
    pub schemes: Vec<ModulationScheme>,
    pub snr_grid: Vec<i32>,
    pub train_per_cell: usize,
    /// Test frames per training frame in each (scheme, SNR) cell.
    pub test_ratio: usize,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    #[serde(default = "default_sps")]
    pub sps: usize,
    #[serde(default = "default_span")]
    pub span: usize,
    #[serde(default = "default_beta_range")]
    pub beta_range: [f64; 2],
    #[serde(default = "default_f0_range")]
    pub f0_range: [f64; 2],
    /// FSK tone spacing in cycles/sample; defaults to 1/(2·sps).
    #[serde(default)]
    pub fsk_spacing: Option<f64>,
    pub master_seed: u64,
}

fn default_frame_len() -> usize {
    1024
}
fn default_sps() -> usize {
    8
}
fn default_span() -> usize {
    6
}
fn default_beta_range() -> [f64; 2] {
    [0.2, 0.7]
}
fn default_f0_range() -> [f64; 2] {
    [-0.2, 0.2]
}

impl Profile {
    /// Twelve schemes, SNR -20..=30 dB in 2 dB steps, 10 training frames per
    /// cell and a 1:50 train/test ratio.
    pub fn rml1024(master_seed: u64) -> Self {
        Profile {
            name: "rml1024".into(),
            schemes: ModulationScheme::ALL.to_vec(),
            snr_grid: (-20..=30).step_by(2).collect(),
            train_per_cell: 10,
            test_ratio: 50,
            frame_len: default_frame_len(),
            sps: default_sps(),
            span: default_span(),
            beta_range: default_beta_range(),
            f0_range: default_f0_range(),
            fsk_spacing: None,
            master_seed,
        }
    }

    /// Desk-scale variant: BPSK, QPSK, 2FSK, 4PAM at {0, 6, 12, 18} dB,
    /// 10 training and 200 test frames per cell.
    pub fn rml1024_mini(master_seed: u64) -> Self {
        Profile {
            name: "rml1024-mini".into(),
            schemes: vec![
                ModulationScheme::Bpsk,
                ModulationScheme::Qpsk,
                ModulationScheme::Fsk2,
                ModulationScheme::Pam4,
            ],
            snr_grid: vec![0, 6, 12, 18],
            test_ratio: 20,
            ..Self::rml1024(master_seed)
        }
    }

    pub fn builtin(name: &str, master_seed: u64) -> Result<Self> {
        match name {
            "rml1024" => Ok(Self::rml1024(master_seed)),
            "rml1024-mini" => Ok(Self::rml1024_mini(master_seed)),
            other => Err(Error::Config(format!(
                "unknown built-in profile `{other}` (rml1024, rml1024-mini)"
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Profile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn train_count(&self) -> usize {
        self.schemes.len() * self.snr_grid.len() * self.train_per_cell
    }

    pub fn test_count(&self) -> usize {
        self.train_count() * self.test_ratio
    }

    pub fn label_map(&self) -> Vec<String> {
        self.schemes.iter().map(|s| s.name().to_string()).collect()
    }

    pub fn shape_params(&self) -> ShapeParams {
        let mut p = ShapeParams::new(self.sps, self.frame_len);
        if let Some(s) = self.fsk_spacing {
            p.fsk_spacing = s;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schemes.is_empty() {
            return bad("scheme list is empty".into());
        }
        if self.snr_grid.is_empty() {
            return bad("SNR grid is empty".into());
        }
        for (k, s) in self.schemes.iter().enumerate() {
            if self.schemes[..k].contains(s) {
                return bad(format!("scheme {s} listed twice"));
            }
        }
        if !self.frame_len.is_power_of_two() || self.frame_len < 2 {
            return bad(format!(
                "frame_len {} is not a power of two",
                self.frame_len
            ));
        }
        if self.sps == 0 || self.span == 0 || !(self.sps * self.span).is_multiple_of(2) {
            return bad(format!("sps {} / span {} invalid", self.sps, self.span));
        }
        let [b0, b1] = self.beta_range;
        if !(b0 > 0.0 && b1 < 1.0 && b0 <= b1) {
            return bad(format!(
                "beta range {:?} must lie in (0, 1)",
                self.beta_range
            ));
        }
        let [f0, f1] = self.f0_range;
        if !(-0.2..=0.2).contains(&f0) || !(-0.2..=0.2).contains(&f1) || f0 > f1 {
            return bad(format!(
                "f0 range {:?} must lie in [-0.2, 0.2]",
                self.f0_range
            ));
        }
        if self.train_per_cell == 0 {
            return bad("train_per_cell must be positive".into());
        }
        Ok(())
    }
}

/// Generation parameters drawn for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDraw {
    pub beta: f64,
    pub channel: ChannelSpec,
}

/// Synthesizes one frame from its own seed.
pub fn synthesize_frame(
    profile: &Profile,
    label: u16,
    snr_db: i32,
    seed_path: &[u64],
) -> Result<(IqFrame, FrameDraw)> {
    let scheme = *profile
        .schemes
        .get(usize::from(label))
        .ok_or_else(|| Error::LabelMismatch(format!("label {label}")))?;
    let mut rng = rng_for(profile.master_seed, seed_path);
    let uniform = |rng: &mut crate::rng::Rng, [lo, hi]: [f64; 2]| {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..hi)
        }
    };
    let beta = uniform(&mut rng, profile.beta_range);
    let f0 = uniform(&mut rng, profile.f0_range);
    let theta = rng.random_range(0.0..2.0 * PI);
    let channel = ChannelSpec::new(f0, theta, f64::from(snr_db))?;

    let taps = rrc_taps(beta, profile.sps, profile.span)?;
    let offset = scheme.family() == Family::OffsetPsk;
    let n_sym = symbols_needed(offset, profile.sps, profile.frame_len, taps.len());
    let bits: Vec<u8> = (0..n_sym * scheme.bits_per_symbol())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let baseband = map_symbols(&bits, scheme)?;
    let mut samples = channel::render(&baseband, &taps, &profile.shape_params(), &channel)?;
    channel::add_awgn_complex(&mut samples, channel.snr_db, &mut rng);

    let i: Vec<f32> = samples.iter().map(|c| c.re as f32).collect();
    let q: Vec<f32> = samples.iter().map(|c| c.im as f32).collect();
    Ok((
        IqFrame::new(&i, &q, label, snr_db)?,
        FrameDraw { beta, channel },
    ))
}

fn split_code(split: Split) -> u64 {
    match split {
        Split::Train => 0,
        Split::Test => 1,
    }
}

/// Builds one split. Frames are ordered by (scheme, SNR, repetition) and each
/// frame's randomness derives from (master seed, split, frame index).
pub fn synthesize_split(profile: &Profile, split: Split, exec: Execution) -> Result<Dataset> {
    profile.validate()?;
    let per_cell = match split {
        Split::Train => profile.train_per_cell,
        Split::Test => profile.train_per_cell * profile.test_ratio,
    };
    let n_snr = profile.snr_grid.len();
    let total = profile.schemes.len() * n_snr * per_cell;
    let code = split_code(split);
    let frames = exec.try_map_range(total, |idx| {
        let cell = idx / per_cell;
        let label = (cell / n_snr) as u16;
        let snr = profile.snr_grid[cell % n_snr];
        synthesize_frame(profile, label, snr, &[code, idx as u64]).map(|(f, _)| f)
    })?;
    Ok(Dataset {
        header: DatasetHeader {
            frame_len: profile.frame_len,
            label_map: profile.label_map(),
            snr_grid: profile.snr_grid.clone(),
            split,
            master_seed: profile.master_seed,
            generation: serde_json::json!({ "profile": profile }),
        },
        frames,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedSets {
    pub train: Dataset,
    pub test: Dataset,
}

pub fn synthesize_dataset(profile: &Profile, exec: Execution) -> Result<SynthesizedSets> {
    Ok(SynthesizedSets {
        train: synthesize_split(profile, Split::Train, exec)?,
        test: synthesize_split(profile, Split::Test, exec)?,
    })
}
