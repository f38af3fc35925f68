//! Parameter checkpoints.
//!
//! ```text
//! magic    b"GWCCKPT\0"
//! version  u32 (currently 1)
//! config   u64 byte length, then the ModelConfig as UTF-8 JSON
//! count    u64 number of tensors (input, layers…, output)
//! tensor   rows u64, cols u64, rows·cols f64 values in row-major order
//! ```
//!
//! All integers and reals are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ModelConfig, ModelError, ModelParameters};
use crate::linalg::DenseMatrix;
use crate::Scalar;

const MAGIC: &[u8; 8] = b"GWCCKPT\0";
const VERSION: u32 = 1;

pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    config: &ModelConfig,
    params: &ModelParameters<T>,
) -> Result<(), ModelError> {
    params.check_shapes(config)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let json = serde_json::to_vec(config).map_err(|e| ModelError::BadCheckpoint(e.to_string()))?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let tensors = params.tensors();
    w.write_all(&(tensors.len() as u64).to_le_bytes())?;
    for t in tensors {
        w.write_all(&(t.rows() as u64).to_le_bytes())?;
        w.write_all(&(t.cols() as u64).to_le_bytes())?;
        for &v in t.as_slice() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(
    path: &Path,
) -> Result<(ModelConfig, ModelParameters<T>), ModelError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::BadCheckpoint("bad magic header".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(ModelError::BadCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let len = read_u64(&mut r)? as usize;
    if len > 1 << 20 {
        return Err(ModelError::BadCheckpoint("config block too large".into()));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let config: ModelConfig =
        serde_json::from_slice(&json).map_err(|e| ModelError::BadCheckpoint(e.to_string()))?;
    let count = read_u64(&mut r)? as usize;
    if count != config.layers + 2 {
        return Err(ModelError::BadCheckpoint(format!(
            "{count} tensors for a {}-layer model",
            config.layers
        )));
    }
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        if rows.saturating_mul(cols) > 1 << 32 {
            return Err(ModelError::BadCheckpoint("tensor too large".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            data.push(T::lit(f64::from_le_bytes(b)));
        }
        tensors.push(DenseMatrix::from_vec(rows, cols, data)?);
    }
    let output = tensors.pop().expect("count >= 2");
    let input = tensors.remove(0);
    let params = ModelParameters {
        input,
        layers: tensors,
        output,
    };
    params.check_shapes(&config)?;
    Ok((config, params))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
