use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sizing error: {0}")]
    Sizing(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown modulation scheme `{name}`")]
    UnknownScheme { name: String },
    #[error("unknown wavelet `{name}`; supported: {supported}")]
    UnknownWavelet { name: String, supported: String },
    #[error("wavelet `{name}` failed filter check: {reason}")]
    FilterCheck { name: String, reason: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("incompatible datasets: {0}")]
    Incompatible(String),
    #[error("payload size mismatch for {path}: expected {expected} bytes, found {found}")]
    PayloadSize {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Diverged {
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
