//! Single-file checkpoints: a JSON manifest (parameter names and shapes plus
//! free-form metadata) followed by the little-endian `f64` data of every
//! parameter in manifest order.
//!
//! ```text
//! b"SSMAILCK" | u32 version | u64 manifest_len | manifest json | f64 LE ...
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParameterSet;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SSMAILCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    meta: serde_json::Value,
    params: Vec<ManifestEntry>,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    params: &ParameterSet,
    meta: &serde_json::Value,
) -> Result<()> {
    let manifest = Manifest {
        meta: meta.clone(),
        params: params
            .iter()
            .map(|(name, t)| ManifestEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for (_, t) in params.iter() {
        for x in t.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ParameterSet, serde_json::Value)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a checkpoint file".into()));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b)?;
    let version = u32::from_le_bytes(u32b);
    if version != VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u64b)?;
    let len = u64::from_le_bytes(u64b) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let manifest: Manifest = serde_json::from_slice(&json)?;
    let mut params = ParameterSet::new();
    for entry in manifest.params {
        let n: usize = entry.shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u64b)?;
            data.push(f64::from_le_bytes(u64b));
        }
        params.insert(entry.name, Tensor::new(entry.shape, data)?)?;
    }
    Ok((params, manifest.meta))
}

pub fn save(path: impl AsRef<Path>, params: &ParameterSet, meta: &serde_json::Value) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(std::io::BufWriter::new(file), params, meta)
}

pub fn load(path: impl AsRef<Path>) -> Result<(ParameterSet, serde_json::Value)> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(file))
}

/// Overwrite the values of `dst` with same-named entries of `src`.
pub fn restore_into(dst: &mut ParameterSet, src: &ParameterSet) -> Result<()> {
    dst.check_same_layout(src)?;
    for ((_, d), (_, s)) in dst.iter_mut().zip(src.iter()) {
        d.data_mut().copy_from_slice(s.data());
    }
    Ok(())
}
