use crate::AdError;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// A named flat tensor as stored in checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    dtype: String,
    total_len: usize,
    tensors: Vec<ManifestEntry>,
}

/// Write parameters as a flat little-endian f64 binary plus a JSON manifest
/// describing names, shapes and offsets.
pub fn save_checkpoint(
    bin_path: &Path,
    manifest_path: &Path,
    tensors: &[NamedTensor],
) -> Result<(), AdError> {
    let mut entries = Vec::with_capacity(tensors.len());
    let mut offset = 0usize;
    let mut bytes: Vec<u8> = Vec::new();
    for t in tensors {
        if t.data.len() != t.rows * t.cols {
            return Err(AdError::Checkpoint(format!(
                "tensor {}: data len {} != {}x{}",
                t.name,
                t.data.len(),
                t.rows,
                t.cols
            )));
        }
        entries.push(ManifestEntry {
            name: t.name.clone(),
            rows: t.rows,
            cols: t.cols,
            offset,
            len: t.data.len(),
        });
        for v in &t.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        offset += t.data.len();
    }
    let manifest = Manifest {
        dtype: "f64le".into(),
        total_len: offset,
        tensors: entries,
    };
    let mut f = std::fs::File::create(bin_path)
        .map_err(|e| AdError::Checkpoint(format!("{}: {e}", bin_path.display())))?;
    f.write_all(&bytes)
        .map_err(|e| AdError::Checkpoint(format!("{}: {e}", bin_path.display())))?;
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| AdError::Checkpoint(e.to_string()))?;
    std::fs::write(manifest_path, json)
        .map_err(|e| AdError::Checkpoint(format!("{}: {e}", manifest_path.display())))?;
    Ok(())
}

/// Read a checkpoint written by [`save_checkpoint`]; validates sizes.
pub fn load_checkpoint(bin_path: &Path, manifest_path: &Path) -> Result<Vec<NamedTensor>, AdError> {
    let json = std::fs::read_to_string(manifest_path)
        .map_err(|e| AdError::Checkpoint(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&json).map_err(|e| AdError::Checkpoint(e.to_string()))?;
    if manifest.dtype != "f64le" {
        return Err(AdError::Checkpoint(format!(
            "unsupported dtype {}",
            manifest.dtype
        )));
    }
    let mut bytes = Vec::new();
    std::fs::File::open(bin_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| AdError::Checkpoint(format!("{}: {e}", bin_path.display())))?;
    if bytes.len() != manifest.total_len * 8 {
        return Err(AdError::Checkpoint(format!(
            "binary is {} bytes, manifest expects {}",
            bytes.len(),
            manifest.total_len * 8
        )));
    }
    let mut out = Vec::with_capacity(manifest.tensors.len());
    for e in &manifest.tensors {
        if e.len != e.rows * e.cols || e.offset + e.len > manifest.total_len {
            return Err(AdError::Checkpoint(format!(
                "tensor {}: inconsistent manifest entry",
                e.name
            )));
        }
        let mut data = Vec::with_capacity(e.len);
        for i in 0..e.len {
            let at = (e.offset + i) * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[at..at + 8]);
            data.push(f64::from_le_bytes(buf));
        }
        out.push(NamedTensor {
            name: e.name.clone(),
            rows: e.rows,
            cols: e.cols,
            data,
        });
    }
    Ok(out)
}
