//! `SREC` checkpoints: magic, version byte, u32 LE header length, a JSON
//! header `{config, tensors}`, then raw little-endian f32 payloads.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sre_core::data::LabeledDataset;
use sre_core::{Network, NetworkConfig, Scalar, Tensor};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SREC";
pub const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint version {0} is not supported")]
    UnsupportedVersion(u8),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("malformed checkpoint header: {0}")]
    Header(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    byte_offset: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Header {
    config: NetworkConfig,
    tensors: Vec<TensorEntry>,
}

/// Serializes parameters and buffers (always as f32).
pub fn to_bytes<T: Scalar>(net: &Network<T>) -> Result<Vec<u8>> {
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    for (name, t) in net.state() {
        tensors.push(TensorEntry {
            name,
            dtype: "f32".into(),
            shape: t.dims().to_vec(),
            byte_offset: payload.len(),
        });
        payload.extend(t.data().iter().flat_map(|v| (Scalar::to_f64(*v) as f32).to_le_bytes()));
    }
    let header = serde_json::to_vec(&Header {
        config: net.config().clone(),
        tensors,
    })?;
    let len = u32::try_from(header.len()).map_err(|_| CheckpointError::Header("header too large".into()))?;
    let mut out = Vec::with_capacity(9 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    let version = *bytes.get(4).ok_or(CheckpointError::Truncated)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version).into());
    }
    let len = bytes.get(5..9).ok_or(CheckpointError::Truncated)?;
    let len = u32::from_le_bytes(len.try_into().unwrap()) as usize;
    let header = bytes.get(9..9 + len).ok_or(CheckpointError::Truncated)?;
    let header: Header =
        serde_json::from_slice(header).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let payload = &bytes[9 + len..];
    let mut net = Network::<T>::build(&header.config)?;
    let expected: Vec<String> = net.state().into_iter().map(|(n, _)| n).collect();
    let mut end = 0;
    for entry in &header.tensors {
        if entry.dtype != "f32" {
            return Err(CheckpointError::Header(format!("{}: dtype {:?}", entry.name, entry.dtype)).into());
        }
        if !expected.contains(&entry.name) {
            return Err(CheckpointError::Header(format!("unknown tensor {:?}", entry.name)).into());
        }
        let n = entry
            .shape
            .iter()
            .try_fold(4usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| CheckpointError::Header(format!("{}: shape overflows", entry.name)))?;
        let stop = entry.byte_offset.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let raw = payload.get(entry.byte_offset..stop).ok_or(CheckpointError::Truncated)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| T::from_f64(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect();
        net.set_tensor(&entry.name, Tensor::from_vec(&entry.shape, values)?)?;
        end = end.max(stop);
    }
    if let Some(missing) = expected.iter().find(|n| !header.tensors.iter().any(|e| &e.name == *n)) {
        return Err(CheckpointError::Header(format!("missing tensor {missing:?}")).into());
    }
    if end != payload.len() {
        return Err(CheckpointError::Header(format!("{} trailing payload bytes", payload.len() - end)).into());
    }
    Ok(net)
}

pub fn save_checkpoint<T: Scalar>(net: &Network<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Network<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// Checks that a network config can consume a dataset.
pub fn ensure_matches(config: &NetworkConfig, data: &LabeledDataset) -> Result<()> {
    let split = &data.train;
    let mismatch = |m: String| Err(Error::ConfigMismatch(m));
    if config.dims != split.dims {
        return mismatch(format!("network is {}D, data is {}D", config.dims, split.dims));
    }
    if config.in_channels != split.channels() {
        return mismatch(format!(
            "network takes {} channels, data has {}",
            config.in_channels,
            split.channels()
        ));
    }
    if config.num_classes != data.num_outputs() {
        return mismatch(format!(
            "network has {} outputs, data has {}",
            config.num_classes,
            data.num_outputs()
        ));
    }
    let spatial = split.spatial();
    let factor = 1usize << config.downsamples();
    if spatial.iter().any(|&e| e != spatial[0] || e % factor != 0) {
        return mismatch(format!(
            "extent {spatial:?} must be square and divisible by {factor}"
        ));
    }
    Ok(())
}
