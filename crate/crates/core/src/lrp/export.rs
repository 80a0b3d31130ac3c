use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RelevanceMap;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::net::Volume;
use crate::scalar::Scalar;

/// Structured-text companion of an exported map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub input_id: usize,
    pub neuron: usize,
    pub absorbed_fraction: f64,
    pub inactive: bool,
    pub shape: Volume,
}

/// Writes `map` as little-endian f32 values to `path` and the sidecar to
/// `path` with a `.json` extension.
pub fn write_map<T: Scalar>(path: &Path, map: &RelevanceMap<T>, input_id: usize) -> Result<()> {
    let mut bytes = Vec::with_capacity(map.values.len() * 4);
    for v in &map.values {
        bytes.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    write_atomic(path, &bytes)?;
    let sidecar = MapSidecar {
        input_id,
        neuron: map.neuron,
        absorbed_fraction: map.absorbed.to_f64_lossy(),
        inactive: map.inactive,
        shape: map.shape,
    };
    write_atomic(&path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?.as_bytes())
}

pub fn read_map(path: &Path) -> Result<(Vec<f32>, MapSidecar)> {
    let sidecar: MapSidecar = serde_json::from_slice(&std::fs::read(path.with_extension("json"))?)?;
    let bytes = std::fs::read(path)?;
    if bytes.len() != sidecar.shape.len() * 4 {
        return Err(Error::Shape(format!("map file holds {} bytes, sidecar shape needs {}", bytes.len(), sidecar.shape.len() * 4)));
    }
    let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok((values, sidecar))
}
