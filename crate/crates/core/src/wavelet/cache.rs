//! Flat binary cache for computed bases.
//!
//! Layout, all integers `u64` and reals `f64`, little-endian:
//!
//! ```text
//! magic   b"GWCWAVE1"
//! key     id_len, id bytes (UTF-8), scale, threshold, method (0 exact | 1 cheby), order
//! psi     rows, cols, nnz, offsets[rows + 1], indices[nnz], values[nnz]
//! psi⁻¹   same layout
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{WaveletBasis, WaveletError, WaveletMethod};
use crate::linalg::SparseMatrix;
use crate::Scalar;

const MAGIC: &[u8; 8] = b"GWCWAVE1";

/// Identifies a cached basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisKey {
    pub dataset_id: String,
    pub scale: f64,
    pub threshold: f64,
    pub method: WaveletMethod,
}

impl BasisKey {
    /// File name unique to this key within a cache directory.
    pub fn file_name(&self) -> String {
        let id: String = self
            .dataset_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let method = match self.method {
            WaveletMethod::Exact => "exact".to_string(),
            WaveletMethod::Chebyshev { order } => format!("cheby{order}"),
        };
        format!(
            "{id}-s{:016x}-t{:016x}-{method}.gwcb",
            self.scale.to_bits(),
            self.threshold.to_bits()
        )
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(self.file_name())
    }
}

pub fn save_basis<T: Scalar>(
    path: &Path,
    key: &BasisKey,
    basis: &WaveletBasis<T>,
) -> Result<(), WaveletError> {
    let tmp = path.with_extension("gwcb.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(MAGIC)?;
        put_u64(&mut w, key.dataset_id.len() as u64)?;
        w.write_all(key.dataset_id.as_bytes())?;
        put_f64(&mut w, key.scale)?;
        put_f64(&mut w, key.threshold)?;
        let (tag, order) = match key.method {
            WaveletMethod::Exact => (0, 0),
            WaveletMethod::Chebyshev { order } => (1, order as u64),
        };
        put_u64(&mut w, tag)?;
        put_u64(&mut w, order)?;
        write_csr(&mut w, &basis.psi)?;
        write_csr(&mut w, &basis.psi_inverse)?;
        w.flush()?;
    }
    std::fs::rename(tmp, path)?;
    Ok(())
}

/// Loads a cached basis; a key stored in the file that differs from `key`
/// is reported as [`WaveletError::BadCache`].
pub fn load_basis<T: Scalar>(path: &Path, key: &BasisKey) -> Result<WaveletBasis<T>, WaveletError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(WaveletError::BadCache("bad magic header".into()));
    }
    let id_len = get_len(&mut r, 1 << 20)?;
    let mut id = vec![0u8; id_len];
    r.read_exact(&mut id)?;
    let id = String::from_utf8(id).map_err(|_| WaveletError::BadCache("dataset id not UTF-8".into()))?;
    let scale = get_f64(&mut r)?;
    let threshold = get_f64(&mut r)?;
    let method = match (get_u64(&mut r)?, get_u64(&mut r)?) {
        (0, _) => WaveletMethod::Exact,
        (1, order) => WaveletMethod::Chebyshev {
            order: order as usize,
        },
        (tag, _) => return Err(WaveletError::BadCache(format!("unknown method tag {tag}"))),
    };
    let stored = BasisKey {
        dataset_id: id,
        scale,
        threshold,
        method,
    };
    if &stored != key {
        return Err(WaveletError::BadCache(format!(
            "key mismatch: file holds {stored:?}, wanted {key:?}"
        )));
    }
    let psi = read_csr(&mut r)?;
    let psi_inverse = read_csr(&mut r)?;
    if psi.shape() != psi_inverse.shape() || psi.rows() != psi.cols() {
        return Err(WaveletError::BadCache("basis pair shapes disagree".into()));
    }
    Ok(WaveletBasis::new(psi, psi_inverse, scale, threshold, method))
}

fn write_csr<T: Scalar>(w: &mut impl Write, m: &SparseMatrix<T>) -> std::io::Result<()> {
    put_u64(w, m.rows() as u64)?;
    put_u64(w, m.cols() as u64)?;
    put_u64(w, m.nnz() as u64)?;
    for &o in m.offsets() {
        put_u64(w, o as u64)?;
    }
    for &j in m.indices() {
        put_u64(w, j as u64)?;
    }
    for &v in m.values() {
        put_f64(w, v.as_f64())?;
    }
    Ok(())
}

fn read_csr<T: Scalar>(r: &mut impl Read) -> Result<SparseMatrix<T>, WaveletError> {
    const LIMIT: usize = 1 << 40;
    let rows = get_len(r, LIMIT)?;
    let cols = get_len(r, LIMIT)?;
    let nnz = get_len(r, LIMIT)?;
    let offsets = (0..=rows)
        .map(|_| get_u64(r).map(|x| x as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let indices = (0..nnz)
        .map(|_| get_u64(r).map(|x| x as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let values = (0..nnz)
        .map(|_| get_f64(r).map(T::lit))
        .collect::<Result<Vec<_>, _>>()?;
    SparseMatrix::from_csr(rows, cols, offsets, indices, values)
        .map_err(|e| WaveletError::BadCache(e.to_string()))
}

fn put_u64(w: &mut impl Write, x: u64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn put_f64(w: &mut impl Write, x: f64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn get_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_len(r: &mut impl Read, limit: usize) -> Result<usize, WaveletError> {
    let x = get_u64(r)? as usize;
    if x > limit {
        return Err(WaveletError::BadCache(format!("length {x} exceeds limit")));
    }
    Ok(x)
}
