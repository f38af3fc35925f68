use rayon::prelude::*;

use super::LinalgError;
use crate::Scalar;

const TILE: usize = 4;
const K_BLOCK: usize = 256;

/// Groups rows in fours and interleaves them column by column, so one step
/// of the inner loop reads four consecutive values per operand. Missing
/// rows of the last group are zero.
fn pack_tiles<T: Scalar>(m: &DenseMatrix<T>) -> Vec<T> {
    let (n, k) = m.shape();
    let tiles = n.div_ceil(TILE);
    let mut packed = vec![T::zero(); tiles * TILE * k];
    for i in 0..n {
        let (t, r) = (i / TILE, i % TILE);
        let base = t * TILE * k;
        for (p, &v) in m.row(i).iter().enumerate() {
            packed[base + p * TILE + r] = v;
        }
    }
    packed
}

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadBuffer {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from `f64` row literals. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().map(|&x| T::lit(x)));
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
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
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(|x| x * alpha)
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<(), LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<(), LinalgError> {
        self.check_same_shape(other, "axpy")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Dense product `self * other`, parallel over output rows.
    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        if m == 0 {
            return Ok(out);
        }
        out.data
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(i, out_row)| {
                let a_row = &self.data[i * k..(i + 1) * k];
                let quads = k / 4 * 4;
                for p in (0..quads).step_by(4) {
                    let a = [a_row[p], a_row[p + 1], a_row[p + 2], a_row[p + 3]];
                    let b0 = &other.data[p * m..(p + 1) * m];
                    let b1 = &other.data[(p + 1) * m..(p + 2) * m];
                    let b2 = &other.data[(p + 2) * m..(p + 3) * m];
                    let b3 = &other.data[(p + 3) * m..(p + 4) * m];
                    for j in 0..m {
                        out_row[j] += a[0] * b0[j] + a[1] * b1[j] + a[2] * b2[j] + a[3] * b3[j];
                    }
                }
                for (p, &a) in a_row.iter().enumerate().skip(quads) {
                    let b_row = &other.data[p * m..(p + 1) * m];
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += a * b;
                    }
                }
            });
        Ok(out)
    }

    /// `self^T * other` without materializing the transpose.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul_tn",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (k, n, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        for p in 0..k {
            let a_row = &self.data[p * n..(p + 1) * n];
            let b_row = &other.data[p * m..(p + 1) * m];
            for (i, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let out_row = &mut out.data[i * m..(i + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul_nt",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, m) = (self.rows, other.rows);
        let mut out = Self::zeros(n, m);
        if m == 0 {
            return Ok(out);
        }
        out.data
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(i, out_row)| {
                let a = self.row(i);
                for (j, o) in out_row.iter_mut().enumerate() {
                    *o = dot(a, other.row(j));
                }
            });
        Ok(out)
    }

    /// `self * other^T` for products known to be symmetric: only the upper
    /// triangle is computed and then mirrored, so the result is exactly
    /// symmetric. Cache-blocked with a 4×4 register tile.
    pub fn matmul_nt_symmetric(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.cols || self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul_nt_symmetric",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, k) = (self.rows, self.cols);
        let mut out = Self::zeros(n, n);
        if n == 0 {
            return Ok(out);
        }
        let a = pack_tiles(self);
        let b = pack_tiles(other);
        let tiles = n.div_ceil(TILE);
        out.data
            .par_chunks_mut(TILE * n)
            .enumerate()
            .for_each(|(it, out_rows)| {
                let a_tile = &a[it * TILE * k..(it + 1) * TILE * k];
                for kb in (0..k).step_by(K_BLOCK) {
                    let ke = (kb + K_BLOCK).min(k);
                    for jt in it..tiles {
                        let b_tile = &b[jt * TILE * k..(jt + 1) * TILE * k];
                        let mut acc = [[T::zero(); TILE]; TILE];
                        for p in kb..ke {
                            let av = [a_tile[p * TILE], a_tile[p * TILE + 1], a_tile[p * TILE + 2], a_tile[p * TILE + 3]];
                            let bv = [b_tile[p * TILE], b_tile[p * TILE + 1], b_tile[p * TILE + 2], b_tile[p * TILE + 3]];
                            for r in 0..TILE {
                                for c in 0..TILE {
                                    acc[r][c] += av[r] * bv[c];
                                }
                            }
                        }
                        for (r, acc_row) in acc.iter().enumerate() {
                            let i = it * TILE + r;
                            if i >= n {
                                break;
                            }
                            for (c, &v) in acc_row.iter().enumerate() {
                                let j = jt * TILE + c;
                                if j < n {
                                    out_rows[r * n + j] += v;
                                }
                            }
                        }
                    }
                }
            });
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i];
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T, LinalgError> {
        self.check_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }

    /// Largest `|m_ij - m_ji|`; requires a square matrix.
    pub fn max_asymmetry(&self) -> Result<T, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut worst = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Ok(worst)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `‖a − b‖_F / max(‖b‖_F, ε)`.
pub fn frobenius_rel_error<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<T, LinalgError> {
    let diff = a.sub(b)?;
    let denom = b.frobenius_norm().max(T::epsilon());
    Ok(diff.frobenius_norm() / denom)
}
