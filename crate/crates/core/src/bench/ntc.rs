//! NTC tensor container: a directory holding `manifest.json` and one raw
//! little-endian `f32` blob, `tensors.bin`.
//!
//! ```json
//! {
//!   "format": "ntc",
//!   "version": 1,
//!   "metadata": { "architecture": "..." },
//!   "tensors": [
//!     { "name": "layers.0.weight", "dtype": "f32", "shape": [230, 16],
//!       "byte_offset": 0, "byte_length": 14720 }
//!   ]
//! }
//! ```
//!
//! Offsets are 8-byte aligned. A manifest is checked completely before any
//! tensor is returned.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "tensors.bin";
const FORMAT: &str = "ntc";
const VERSION: u32 = 1;
const ALIGN: u64 = 8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NtcContainer {
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl NtcContainer {
    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<f32>) {
        self.tensors.push((name.into(), tensor));
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    tensors: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    byte_offset: u64,
    byte_length: u64,
}

pub fn save_ntc(container: &NtcContainer, dir: &Path) -> Result<()> {
    let mut names = HashSet::new();
    let mut blob = Vec::new();
    let mut entries = Vec::with_capacity(container.tensors.len());
    for (name, t) in &container.tensors {
        if !names.insert(name.as_str()) {
            return Err(Error::container(Some(name), "duplicate tensor name"));
        }
        while !(blob.len() as u64).is_multiple_of(ALIGN) {
            blob.push(0);
        }
        let offset = blob.len() as u64;
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        entries.push(Entry {
            name: name.clone(),
            dtype: "f32".into(),
            shape: t.shape().to_vec(),
            byte_offset: offset,
            byte_length: blob.len() as u64 - offset,
        });
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        metadata: container.metadata.clone(),
        tensors: entries,
    };
    fs::create_dir_all(dir)?;
    fs::write(dir.join(BLOB_FILE), &blob)?;
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::container(None, format!("cannot encode manifest: {e}")))?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

pub fn load_ntc(dir: &Path) -> Result<NtcContainer> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let blob = fs::read(dir.join(BLOB_FILE))?;
    parse_ntc(&text, &blob)
}

/// Decodes a container from manifest text and blob bytes.
pub fn parse_ntc(manifest: &str, blob: &[u8]) -> Result<NtcContainer> {
    let m: Manifest = serde_json::from_str(manifest)
        .map_err(|e| Error::container(None, format!("malformed manifest: {e}")))?;
    if m.format != FORMAT || m.version != VERSION {
        return Err(Error::container(
            None,
            format!("unsupported container `{}` version {}", m.format, m.version),
        ));
    }
    let mut names = HashSet::new();
    for e in &m.tensors {
        let name = Some(e.name.as_str());
        if !names.insert(e.name.as_str()) {
            return Err(Error::container(name, "duplicate tensor name"));
        }
        if e.dtype != "f32" {
            return Err(Error::container(name, format!("dtype `{}` is not f32", e.dtype)));
        }
        let expected = e
            .shape
            .iter()
            .try_fold(4u64, |acc, &d| acc.checked_mul(d as u64))
            .ok_or_else(|| Error::container(name, "shape overflows"))?;
        if e.byte_length != expected {
            return Err(Error::container(
                name,
                format!("shape {:?} needs {expected} bytes, manifest says {}", e.shape, e.byte_length),
            ));
        }
        if e.byte_offset % ALIGN != 0 {
            return Err(Error::container(name, format!("offset {} is not 8-byte aligned", e.byte_offset)));
        }
        let end = e.byte_offset.checked_add(e.byte_length);
        if end.is_none_or(|end| end > blob.len() as u64) {
            return Err(Error::container(
                name,
                format!(
                    "needs bytes {}..{} but the blob holds {} bytes",
                    e.byte_offset,
                    e.byte_offset.saturating_add(e.byte_length),
                    blob.len()
                ),
            ));
        }
    }
    let mut spans: Vec<&Entry> = m.tensors.iter().filter(|e| e.byte_length > 0).collect();
    spans.sort_by_key(|e| e.byte_offset);
    for w in spans.windows(2) {
        if w[0].byte_offset + w[0].byte_length > w[1].byte_offset {
            return Err(Error::container(
                Some(&w[1].name),
                format!("overlaps tensor `{}`", w[0].name),
            ));
        }
    }
    let mut tensors = Vec::with_capacity(m.tensors.len());
    for e in m.tensors {
        let bytes = &blob[e.byte_offset as usize..(e.byte_offset + e.byte_length) as usize];
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let t = Tensor::new(e.shape, data).map_err(|err| Error::container(Some(&e.name), err.to_string()))?;
        tensors.push((e.name, t));
    }
    Ok(NtcContainer {
        metadata: m.metadata,
        tensors,
    })
}
