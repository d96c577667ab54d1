//! Wavelet detail-replacement augmentation for radio modulation datasets.
//!
//! The crate covers the whole pipeline: synthesizing labeled IQ frames,
//! multi-level wavelet decomposition, detail-band replacement (AZSR, RZSR,
//! RNSR, RNSR-MW) alongside Flip/SegCS/SegMC baselines, dataset persistence,
//! and a small residual CNN to measure what augmentation buys.

pub mod augment;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod frame;
pub mod rng;
pub mod selftest;
pub mod synthesis;
pub mod wavelet;

pub use error::{Error, Result};
pub use exec::Execution;
pub use frame::{IqFrame, Origin};
