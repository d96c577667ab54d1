//! Dataset persistence.
//!
//! A dataset named `<prefix>` is a pair of files:
//!
//! * `<prefix>.manifest`: JSON document with the header fields and one
//!   frame record per line.
//! * `<prefix>.iq`: raw little-endian `f32` payload, frame-major, I row then
//!   Q row within each frame. Its size is exactly `frame_count · 2 · L · 4`.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{IqFrame, Origin};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub frame_len: usize,
    /// Class index → scheme name.
    pub label_map: Vec<String>,
    pub snr_grid: Vec<i32>,
    pub split: Split,
    pub master_seed: u64,
    /// Echo of whatever produced the set (profile, plan, merge inputs).
    pub generation: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub offset: u64,
    pub label: u16,
    pub snr_db: i32,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub frame_count: usize,
    #[serde(flatten)]
    pub header: DatasetHeader,
    pub frames: Vec<FrameRecord>,
}

impl DatasetManifest {
    pub fn payload_bytes(&self) -> u64 {
        payload_bytes(self.frame_count, self.header.frame_len)
    }
}

pub fn payload_bytes(frame_count: usize, frame_len: usize) -> u64 {
    frame_count as u64 * 2 * frame_len as u64 * 4
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub frames: Vec<IqFrame>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.header.label_map.len()
    }

    /// Checks frame lengths and label indices against the header.
    pub fn validate(&self) -> Result<()> {
        let l = self.header.frame_len;
        for (k, f) in self.frames.iter().enumerate() {
            if f.len() != l {
                return Err(Error::Sizing(format!(
                    "frame {k} has length {}, header says {l}",
                    f.len()
                )));
            }
            if usize::from(f.label) >= self.header.label_map.len() {
                return Err(Error::LabelMismatch(format!(
                    "frame {k} has label {} outside the label map",
                    f.label
                )));
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        let stride = payload_bytes(1, self.header.frame_len);
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            frame_count: self.frames.len(),
            header: self.header.clone(),
            frames: self
                .frames
                .iter()
                .enumerate()
                .map(|(k, f)| FrameRecord {
                    offset: k as u64 * stride,
                    label: f.label,
                    snr_db: f.snr_db,
                    origin: f.origin,
                })
                .collect(),
        }
    }
}

pub fn manifest_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "manifest")
}

pub fn payload_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "iq")
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn render_manifest(m: &DatasetManifest) -> Result<String> {
    #[derive(Serialize)]
    struct Head<'a> {
        schema_version: u32,
        frame_count: usize,
        #[serde(flatten)]
        header: &'a DatasetHeader,
    }
    let head = serde_json::to_string_pretty(&Head {
        schema_version: m.schema_version,
        frame_count: m.frame_count,
        header: &m.header,
    })?;
    let head = head
        .strip_suffix('}')
        .ok_or_else(|| Error::Manifest("header did not serialize to an object".into()))?
        .trim_end();
    let mut out = String::with_capacity(head.len() + 64 * m.frames.len() + 32);
    out.push_str(head);
    out.push_str(",\n  \"frames\": [");
    for (k, r) in m.frames.iter().enumerate() {
        out.push_str(if k == 0 { "\n    " } else { ",\n    " });
        out.push_str(&serde_json::to_string(r)?);
    }
    out.push_str(if m.frames.is_empty() {
        "]\n}\n"
    } else {
        "\n  ]\n}\n"
    });
    Ok(out)
}

struct TempFile(PathBuf);

impl Drop for TempFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Writes `dataset` under `prefix`. Both files are staged next to their
/// targets and renamed into place; the manifest is renamed last, so a reader
/// never sees a manifest without its payload.
pub fn write_dataset(dataset: &Dataset, prefix: &Path) -> Result<()> {
    dataset.validate()?;
    let manifest = dataset.manifest();
    let text = render_manifest(&manifest)?;
    let tag = format!("tmp{}", std::process::id());
    let payload_tmp = TempFile(with_suffix(prefix, &format!("iq.{tag}")));
    let manifest_tmp = TempFile(with_suffix(prefix, &format!("manifest.{tag}")));

    {
        let mut w = BufWriter::new(File::create(&payload_tmp.0)?);
        for f in &dataset.frames {
            for v in f.as_slice() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::write(&manifest_tmp.0, text)?;
    fs::rename(&payload_tmp.0, payload_path(prefix))?;
    fs::rename(&manifest_tmp.0, manifest_path(prefix))?;
    Ok(())
}

pub fn read_manifest(prefix: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(manifest_path(prefix))?;
    let probe: serde_json::Value = serde_json::from_str(&text)?;
    let version = probe
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Manifest("missing schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::Schema(version as u32));
    }
    Ok(serde_json::from_value(probe)?)
}

/// Reads a dataset written by [`write_dataset`], validating the payload size
/// and frame records against the manifest first.
pub fn read_dataset(prefix: &Path) -> Result<Dataset> {
    let manifest = read_manifest(prefix)?;
    let l = manifest.header.frame_len;
    if manifest.frames.len() != manifest.frame_count {
        return Err(Error::Manifest(format!(
            "frame_count is {} but {} records are listed",
            manifest.frame_count,
            manifest.frames.len()
        )));
    }
    let path = payload_path(prefix);
    let found = fs::metadata(&path)?.len();
    let expected = manifest.payload_bytes();
    if found != expected {
        return Err(Error::PayloadSize {
            path,
            expected,
            found,
        });
    }
    let mut bytes = Vec::with_capacity(expected as usize);
    File::open(&path)?.read_to_end(&mut bytes)?;
    let stride = 2 * l * 4;
    let mut frames = Vec::with_capacity(manifest.frame_count);
    for (k, rec) in manifest.frames.iter().enumerate() {
        if rec.offset != (k * stride) as u64 {
            return Err(Error::Manifest(format!(
                "record {k} has offset {}, expected {}",
                rec.offset,
                k * stride
            )));
        }
        if usize::from(rec.label) >= manifest.header.label_map.len() {
            return Err(Error::LabelMismatch(format!(
                "record {k} has label {} outside the label map",
                rec.label
            )));
        }
        let chunk = &bytes[k * stride..(k + 1) * stride];
        let data = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        frames.push(
            IqFrame::from_interleaved_rows(data, rec.label, rec.snr_db)?.with_origin(rec.origin),
        );
    }
    Ok(Dataset {
        header: manifest.header,
        frames,
    })
}

/// Concatenates `a` then `b`. The result keeps `a`'s split and seed; the SNR
/// grid is the sorted union.
pub fn merge_sets(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    if a.header.label_map != b.header.label_map {
        return Err(Error::Incompatible(format!(
            "label maps differ: {:?} vs {:?}",
            a.header.label_map, b.header.label_map
        )));
    }
    if a.header.frame_len != b.header.frame_len {
        return Err(Error::Incompatible(format!(
            "frame lengths differ: {} vs {}",
            a.header.frame_len, b.header.frame_len
        )));
    }
    let mut snr_grid = a.header.snr_grid.clone();
    snr_grid.extend(&b.header.snr_grid);
    snr_grid.sort_unstable();
    snr_grid.dedup();
    let generation = if b.is_empty() {
        a.header.generation.clone()
    } else if a.is_empty() {
        b.header.generation.clone()
    } else {
        serde_json::json!({ "merged": [a.header.generation, b.header.generation] })
    };
    let mut frames = Vec::with_capacity(a.len() + b.len());
    frames.extend_from_slice(&a.frames);
    frames.extend_from_slice(&b.frames);
    Ok(Dataset {
        header: DatasetHeader {
            snr_grid,
            generation,
            ..a.header.clone()
        },
        frames,
    })
}
