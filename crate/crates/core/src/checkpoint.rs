//! Named-tensor checkpoint files.
//!
//! Layout: an 8-byte little-endian header length `N`, `N` bytes of JSON
//! header, then the payload of little-endian `f64` values. Header offsets are
//! byte ranges relative to the start of the payload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<[usize; 2]>,
    #[serde(default)]
    metadata: serde_json::Value,
}

/// Ordered named tensors plus free-form JSON metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Tensor)>,
    pub metadata: serde_json::Value,
}

impl Checkpoint {
    pub fn new(tensors: Vec<(String, Tensor)>, metadata: serde_json::Value) -> Self {
        Self { tensors, metadata }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offsets = Vec::with_capacity(self.tensors.len());
        let mut pos = 0usize;
        for (_, t) in &self.tensors {
            let len = t.len() * 8;
            offsets.push([pos, pos + len]);
            pos += len;
        }
        let header = Header {
            format_version: FORMAT_VERSION,
            names: self.tensors.iter().map(|(n, _)| n.clone()).collect(),
            shapes: self.tensors.iter().map(|(_, t)| t.shape().to_vec()).collect(),
            offsets,
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(8 + json.len() + pos);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &self.tensors {
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 8 {
            return Err(bad("file shorter than header length prefix"));
        }
        let hlen = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
        let payload_start = 8usize
            .checked_add(hlen)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("header length exceeds file size"))?;
        let header: Header = serde_json::from_slice(&bytes[8..payload_start])?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {}",
                header.format_version
            )));
        }
        if header.names.len() != header.shapes.len() || header.names.len() != header.offsets.len() {
            return Err(bad("names/shapes/offsets lengths differ"));
        }
        let payload = &bytes[payload_start..];
        let mut tensors = Vec::with_capacity(header.names.len());
        for ((name, shape), [start, end]) in header
            .names
            .into_iter()
            .zip(header.shapes)
            .zip(header.offsets)
        {
            if start > end || end > payload.len() || (end - start) % 8 != 0 {
                return Err(Error::Checkpoint(format!("bad byte range for {name}")));
            }
            let data: Vec<f64> = payload[start..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let t = Tensor::new(shape, data)
                .map_err(|e| Error::Checkpoint(format!("{name}: {e}")))?;
            tensors.push((name, t));
        }
        Ok(Self {
            tensors,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
