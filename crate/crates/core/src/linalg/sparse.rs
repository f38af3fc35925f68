use rayon::prelude::*;

use super::{DenseMatrix, LinalgError};
use crate::Scalar;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and no stored
/// value is an explicit zero once a constructor from this module has run.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            offsets: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        offsets.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != T::zero() {
                indices.push(i);
                values.push(d);
            }
            offsets.push(indices.len());
        }
        Self {
            rows: n,
            cols: n,
            offsets,
            indices,
            values,
        }
    }

    /// Validates raw CSR arrays. Explicit zeros are allowed here and can be
    /// removed with [`SparseMatrix::drop_zeros`].
    pub fn from_csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, LinalgError> {
        if offsets.len() != rows + 1 {
            return Err(LinalgError::InvalidCsr(format!(
                "offsets has length {}, expected {}",
                offsets.len(),
                rows + 1
            )));
        }
        if offsets[0] != 0 || offsets[rows] != indices.len() || indices.len() != values.len() {
            return Err(LinalgError::InvalidCsr(
                "offsets must start at 0 and end at the stored-value count".into(),
            ));
        }
        for i in 0..rows {
            let (start, end) = (offsets[i], offsets[i + 1]);
            if start > end {
                return Err(LinalgError::InvalidCsr(format!("offsets decrease at row {i}")));
            }
            let row = &indices[start..end];
            if row.iter().any(|&j| j >= cols) {
                return Err(LinalgError::InvalidCsr(format!(
                    "column index out of range in row {i}"
                )));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidCsr(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// zero results dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<Self, LinalgError> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= rows || j >= cols) {
            return Err(LinalgError::InvalidCsr(format!(
                "triplet ({i}, {j}) outside {rows}x{cols}"
            )));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                row_of.push(i);
                last = Some((i, j));
            }
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((j, v), i) in indices.into_iter().zip(values).zip(row_of) {
            if v != T::zero() {
                keep_idx.push(j);
                keep_val.push(v);
                offsets[i + 1] += 1;
            }
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices: keep_idx,
            values: keep_val,
        })
    }

    /// Keeps every entry with `|value| >= threshold` (and nonzero).
    pub fn from_dense(m: &DenseMatrix<T>, threshold: T) -> Self {
        let (rows, cols) = m.shape();
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for i in 0..rows {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != T::zero() && v.abs() >= threshold {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (idx, vals) = self.row(i);
        match idx.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    pub fn density(&self) -> f64 {
        let total = self.rows * self.cols;
        if total == 0 {
            0.0
        } else {
            self.nnz() as f64 / total as f64
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let row = out.row_mut(i);
            for (&j, &v) in idx.iter().zip(vals) {
                row[j] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                let p = next[j];
                indices[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            offsets,
            indices,
            values,
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = *v * alpha;
        }
        out.drop_zeros()
    }

    /// Removes explicitly stored zeros.
    pub fn drop_zeros(self) -> Self {
        self.drop_below(T::zero())
    }

    /// Removes stored entries with `|v| < cutoff` as well as explicit zeros.
    pub fn drop_below(mut self, cutoff: T) -> Self {
        let keep = |v: T| v != T::zero() && v.abs() >= cutoff;
        if self.values.iter().all(|&v| keep(v)) {
            return self;
        }
        let mut offsets = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        offsets.push(0);
        for i in 0..self.rows {
            let (s, e) = (self.offsets[i], self.offsets[i + 1]);
            for p in s..e {
                if keep(self.values[p]) {
                    indices.push(self.indices[p]);
                    values.push(self.values[p]);
                }
            }
            offsets.push(indices.len());
        }
        self.offsets = offsets;
        self.indices = indices;
        self.values = values;
        self
    }

    /// `alpha * self + beta * other`, explicit zeros dropped.
    pub fn add_scaled(&self, alpha: T, other: &Self, beta: T) -> Result<Self, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "sparse add",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut offsets = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        offsets.push(0);
        for i in 0..self.rows {
            let (ai, av) = self.row(i);
            let (bi, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ai.len() || q < bi.len() {
                let (j, v) = if q >= bi.len() || (p < ai.len() && ai[p] < bi[q]) {
                    p += 1;
                    (ai[p - 1], alpha * av[p - 1])
                } else if p >= ai.len() || bi[q] < ai[p] {
                    q += 1;
                    (bi[q - 1], beta * bv[q - 1])
                } else {
                    p += 1;
                    q += 1;
                    (ai[p - 1], alpha * av[p - 1] + beta * bv[q - 1])
                };
                if v != T::zero() {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            offsets,
            indices,
            values,
        })
    }

    /// `(M + M^T) / 2`.
    pub fn symmetrize(&self) -> Result<Self, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let half = T::lit(0.5);
        self.add_scaled(half, &self.transpose(), half)
    }

    /// Largest `|m_ij - m_ji|` over stored and implied entries.
    pub fn max_asymmetry(&self) -> T {
        let t = self.transpose();
        match self.add_scaled(T::one(), &t, -T::one()) {
            Ok(d) => d.values.iter().fold(T::zero(), |a, &v| a.max(v.abs())),
            Err(_) => T::infinity(),
        }
    }

    /// Sparse-sparse product (Gustavson, parallel over rows of `self`).
    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "spgemm",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let m = other.cols;
        let rows: Vec<(Vec<usize>, Vec<T>)> = (0..self.rows)
            .into_par_iter()
            .map_init(
                || (vec![T::zero(); m], vec![false; m], Vec::new()),
                |(acc, seen, touched), i| {
                    touched.clear();
                    let (ai, av) = self.row(i);
                    for (&k, &a) in ai.iter().zip(av) {
                        let (bi, bv) = other.row(k);
                        for (&j, &b) in bi.iter().zip(bv) {
                            if !seen[j] {
                                seen[j] = true;
                                touched.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    touched.sort_unstable();
                    let mut idx = Vec::with_capacity(touched.len());
                    let mut val = Vec::with_capacity(touched.len());
                    for &j in touched.iter() {
                        let v = acc[j];
                        if v != T::zero() {
                            idx.push(j);
                            val.push(v);
                        }
                        acc[j] = T::zero();
                        seen[j] = false;
                    }
                    (idx, val)
                },
            )
            .collect();
        let mut offsets = Vec::with_capacity(self.rows + 1);
        offsets.push(0);
        let total: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        for (idx, val) in rows {
            indices.extend(idx);
            values.extend(val);
            offsets.push(indices.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: m,
            offsets,
            indices,
            values,
        })
    }

    /// Sparse-dense product `self * b`, parallel over output rows.
    pub fn spmm(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
        if self.cols != b.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "spmm",
                left: self.shape(),
                right: b.shape(),
            });
        }
        let m = b.cols();
        let mut out = DenseMatrix::zeros(self.rows, m);
        if m == 0 {
            return Ok(out);
        }
        let src = b.as_slice();
        out.as_mut_slice()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(i, out_row)| {
                let (idx, vals) = self.row(i);
                for (&k, &a) in idx.iter().zip(vals) {
                    let b_row = &src[k * m..(k + 1) * m];
                    for (o, &x) in out_row.iter_mut().zip(b_row) {
                        *o += a * x;
                    }
                }
            });
        Ok(out)
    }

    /// `self^T * b` without building the transpose.
    pub fn spmm_transpose(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
        if self.rows != b.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "spmm_transpose",
                left: (self.cols, self.rows),
                right: b.shape(),
            });
        }
        let m = b.cols();
        let mut out = DenseMatrix::zeros(self.cols, m);
        let dst = out.as_mut_slice();
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let b_row = b.row(i);
            for (&j, &a) in idx.iter().zip(vals) {
                let out_row = &mut dst[j * m..(j + 1) * m];
                for (o, &x) in out_row.iter_mut().zip(b_row) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> SparseMatrix<U> {
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }
}

/// Free-function form of [`SparseMatrix::spmm`].
pub fn spmm<T: Scalar>(
    a: &SparseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>, LinalgError> {
    a.spmm(b)
}

/// Keeps entry `(i, j)` iff `|m_ij| >= t`; stored values are copied exactly.
pub fn threshold_sparsify<T: Scalar>(
    m: &DenseMatrix<T>,
    t: T,
) -> Result<SparseMatrix<T>, LinalgError> {
    if !t.is_finite() || t < T::zero() {
        return Err(LinalgError::InvalidThreshold(t.as_f64()));
    }
    Ok(SparseMatrix::from_dense(m, t))
}

pub fn density<T: Scalar>(m: &SparseMatrix<T>) -> f64 {
    m.density()
}
