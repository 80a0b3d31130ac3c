//! Checkpoint files.
//!
//! Layout: the 8-byte magic `ATOMNET1`, a little-endian `u32` header length,
//! a JSON header (arch, tensor names and shapes, dtype, metadata), then the
//! raw little-endian `f32` values of every tensor in header order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::{NetworkArch, TensorSpec};
use super::network::Network;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"ATOMNET1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub dtype: String,
    pub arch: NetworkArch,
    pub tensors: Vec<TensorSpec>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

/// Encodes named tensors. Used for networks and optimiser state alike.
pub fn encode_tensors<T: Scalar>(
    arch: &NetworkArch,
    specs: &[TensorSpec],
    tensors: &[Vec<T>],
    meta: &BTreeMap<String, String>,
) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        dtype: "f32".into(),
        arch: arch.clone(),
        tensors: specs.to_vec(),
        meta: meta.clone(),
    };
    let header = serde_json::to_vec(&header)?;
    let total: usize = specs.iter().map(TensorSpec::len).sum();
    let mut buf = Vec::with_capacity(12 + header.len() + 4 * total);
    buf.write_all(MAGIC)?;
    buf.write_all(&(header.len() as u32).to_le_bytes())?;
    buf.write_all(&header)?;
    for t in tensors {
        for v in t {
            buf.write_all(&(v.to_f64_lossy() as f32).to_le_bytes())?;
        }
    }
    Ok(buf)
}

pub fn decode_tensors<T: Scalar>(bytes: &[u8], path: &Path) -> Result<(CheckpointHeader, Vec<Vec<T>>)> {
    let fail = |reason: String| Error::Checkpoint { path: path.to_path_buf(), reason };
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(fail("bad magic".into()));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + hlen).ok_or_else(|| fail("truncated header".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(body).map_err(|e| fail(format!("unreadable header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(fail(format!("unsupported format version {}", header.format_version)));
    }
    if header.dtype != "f32" {
        return Err(fail(format!("unsupported dtype {}", header.dtype)));
    }
    let mut data = &bytes[12 + hlen..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for spec in &header.tensors {
        let n = spec.len();
        if data.len() < 4 * n {
            return Err(fail(format!("truncated data in tensor {}", spec.name)));
        }
        let (chunk, rest) = data.split_at(4 * n);
        tensors.push(
            chunk
                .chunks_exact(4)
                .map(|c| T::from_f64_lossy(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
                .collect(),
        );
        data = rest;
    }
    if !data.is_empty() {
        return Err(fail(format!("{} trailing bytes", data.len())));
    }
    Ok((header, tensors))
}

pub fn save_checkpoint<T: Scalar>(net: &Network<T>, path: &Path, meta: &BTreeMap<String, String>) -> Result<()> {
    let bytes = encode_tensors(net.arch(), &net.tensor_specs(), net.params(), meta)?;
    write_atomic(path, &bytes)
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Network<T>, BTreeMap<String, String>)> {
    let bytes = fs::read(path)?;
    let (header, tensors) = decode_tensors::<T>(&bytes, path)?;
    let fail = |reason: String| Error::Checkpoint { path: path.to_path_buf(), reason };
    header.arch.validate().map_err(|e| fail(e.to_string()))?;
    if header.tensors != header.arch.tensor_specs() {
        return Err(fail("tensor list does not match the architecture".into()));
    }
    let net = Network::from_params(&header.arch, tensors).map_err(|e| fail(e.to_string()))?;
    Ok((net, header.meta))
}

/// Byte size of a checkpoint with the given header.
pub fn expected_size(header_len: usize, arch: &NetworkArch) -> usize {
    12 + header_len + 4 * arch.param_count()
}
