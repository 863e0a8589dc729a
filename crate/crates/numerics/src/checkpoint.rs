use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{NumericsError, ParamStore, Tensor};

pub const CHECKPOINT_VERSION: &str = "nttlab-ckpt-1";

/// On disk: a little-endian u64 header length, a JSON header, then the flat
/// f64 (little-endian) arrays. Offsets index into the data section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: String,
    meta: serde_json::Value,
    entries: Vec<CheckpointEntry>,
}

/// Serializes every parameter (in registration order) plus free-form metadata.
pub fn write_checkpoint_bytes(
    store: &ParamStore,
    meta: &serde_json::Value,
) -> Result<Vec<u8>, NumericsError> {
    let mut entries = Vec::with_capacity(store.len());
    let mut offset = 0u64;
    for (_, p) in store.iter() {
        entries.push(CheckpointEntry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            offset,
        });
        offset += (p.value.len() * 8) as u64;
    }
    let header = Header {
        version: CHECKPOINT_VERSION.to_string(),
        meta: meta.clone(),
        entries,
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| NumericsError::Checkpoint(e.to_string()))?;
    let mut out = Vec::with_capacity(16 + header_json.len() + offset as usize);
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for (_, p) in store.iter() {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses checkpoint bytes into named tensors plus the stored metadata.
/// Rejects wrong versions, truncated data and malformed entries.
pub fn read_checkpoint_bytes(
    bytes: &[u8],
) -> Result<(Vec<(String, Tensor)>, serde_json::Value), NumericsError> {
    if bytes.len() < 8 {
        return Err(NumericsError::Checkpoint("truncated header length".into()));
    }
    let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let data_start = 8usize
        .checked_add(header_len)
        .ok_or_else(|| NumericsError::Checkpoint("header length overflow".into()))?;
    if bytes.len() < data_start {
        return Err(NumericsError::Checkpoint("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[8..data_start])
        .map_err(|e| NumericsError::Checkpoint(format!("malformed header: {e}")))?;
    if header.version != CHECKPOINT_VERSION {
        return Err(NumericsError::Checkpoint(format!(
            "unsupported version {:?} (expected {CHECKPOINT_VERSION:?})",
            header.version
        )));
    }
    let data = &bytes[data_start..];
    let mut tensors = Vec::with_capacity(header.entries.len());
    for e in &header.entries {
        let count = e.shape.iter().try_fold(1usize, |acc, &d| {
            acc.checked_mul(d)
                .filter(|&v| v <= data.len())
                .ok_or_else(|| NumericsError::Checkpoint(format!("entry {} overflows", e.name)))
        })?;
        let start = usize::try_from(e.offset)
            .map_err(|_| NumericsError::Checkpoint(format!("entry {} offset overflow", e.name)))?;
        let end = start
            .checked_add(count * 8)
            .filter(|&v| v <= data.len())
            .ok_or_else(|| {
                NumericsError::Checkpoint(format!("entry {} out of bounds", e.name))
            })?;
        let values: Vec<f64> = data[start..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::from_vec(&e.shape, values)
            .map_err(|_| NumericsError::Checkpoint(format!("entry {} shape mismatch", e.name)))?;
        tensors.push((e.name.clone(), t));
    }
    Ok((tensors, header.meta))
}

/// Atomic write: temp file in the same directory, then rename.
pub fn save_checkpoint(
    path: &Path,
    store: &ParamStore,
    meta: &serde_json::Value,
) -> Result<(), NumericsError> {
    let bytes = write_checkpoint_bytes(store, meta)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(
    path: &Path,
) -> Result<(Vec<(String, Tensor)>, serde_json::Value), NumericsError> {
    let bytes = std::fs::read(path)?;
    read_checkpoint_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_values_and_meta() {
        let mut store = ParamStore::new();
        store.register("a", Tensor::from_vec(&[2, 2], vec![1.5, -2.0, 0.25, 3.0]).unwrap());
        store.register("b", Tensor::from_vec(&[3], vec![0.1, 0.2, 0.3]).unwrap());
        let meta = serde_json::json!({"seed": 7, "config_hash": "abc"});
        let bytes = write_checkpoint_bytes(&store, &meta).unwrap();
        let (tensors, meta2) = read_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(meta, meta2);
        assert_eq!(tensors.len(), 2);
        assert_eq!(tensors[0].0, "a");
        assert_eq!(tensors[0].1, store.get(crate::ParamId(0)).value);
        assert_eq!(tensors[1].1, store.get(crate::ParamId(1)).value);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let store = ParamStore::new();
        let bytes = write_checkpoint_bytes(&store, &serde_json::Value::Null).unwrap();
        let tampered = String::from_utf8(bytes[8..].to_vec())
            .unwrap()
            .replace(CHECKPOINT_VERSION, "nttlab-ckpt-9");
        let mut out = (tampered.len() as u64).to_le_bytes().to_vec();
        out.extend_from_slice(tampered.as_bytes());
        match read_checkpoint_bytes(&out) {
            Err(NumericsError::Checkpoint(msg)) => assert!(msg.contains("version"), "{msg}"),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_data_is_rejected() {
        let mut store = ParamStore::new();
        store.register("a", Tensor::zeros(&[8]));
        let bytes = write_checkpoint_bytes(&store, &serde_json::Value::Null).unwrap();
        match read_checkpoint_bytes(&bytes[..bytes.len() - 9]) {
            Err(NumericsError::Checkpoint(msg)) => {
                assert!(msg.contains("out of bounds"), "{msg}")
            }
            other => panic!("expected bounds error, got {other:?}"),
        }
    }
}
