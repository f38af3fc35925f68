//! Symmetric eigensolver: Householder reduction to tridiagonal form followed
//! by implicit-shift QL iteration.
//!
//! The working matrix is kept transposed relative to the textbook
//! formulation (rows hold what are usually columns) so the inner loops of
//! both phases walk contiguous memory.

use super::{DenseMatrix, LinalgError};
use crate::Scalar;

/// Maximum QL sweeps spent on any single eigenvalue.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 64;

/// Tolerance on `max |m_ij - m_ji|` accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// `U diag(values) U^T`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.reconstruct_with(|x| x)
    }

    /// `U diag(f(values)) U^T`, computed on the upper triangle and mirrored
    /// so the result is exactly symmetric.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> DenseMatrix<T> {
        let weights: Vec<T> = self.values.iter().map(|&v| f(v)).collect();
        let mut scaled = self.vectors.clone();
        for i in 0..scaled.rows() {
            for (x, &w) in scaled.row_mut(i).iter_mut().zip(&weights) {
                *x *= w;
            }
        }
        scaled
            .matmul_nt_symmetric(&self.vectors)
            .expect("square factors")
    }
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn eigh_sym<T: Scalar>(m: &DenseMatrix<T>) -> Result<SymmetricEigen<T>, LinalgError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let asym = m.max_asymmetry()?;
    if asym.as_f64() > SYMMETRY_TOLERANCE || !asym.is_finite() {
        return Err(LinalgError::NotSymmetric {
            asymmetry: asym.as_f64(),
            tolerance: SYMMETRY_TOLERANCE,
        });
    }
    let n = rows;
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    // Symmetric input: the transposed working copy equals the input.
    let mut z = m.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut z, &mut d, &mut e)?;

    // Sort ascending, permuting eigenvector rows alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for (i, &x) in z.row(k).iter().enumerate() {
            vectors.set(i, col, x);
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Householder reduction. On return `z` holds the accumulated orthogonal
/// transform transposed (row k is column k of Q), `d` the diagonal and
/// `e[1..]` the sub-diagonal of the tridiagonal matrix.
fn tridiagonalize<T: Scalar>(z: &mut DenseMatrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    // z.get(j, k) plays the role of V[k][j].
    for j in 0..n {
        d[j] = z.get(j, n - 1);
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = z.get(j, i - 1);
                z.set(j, i, T::zero());
                z.set(i, j, T::zero());
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                z.set(i, j, f);
                let row_j = z.row(j);
                g = e[j] + row_j[j] * f;
                for k in (j + 1)..i {
                    g += row_j[k] * d[k];
                    e[k] += row_j[k] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let row_j = z.row_mut(j);
                for k in j..i {
                    row_j[k] -= f * e[k] + g * d[k];
                }
                d[j] = row_j[i - 1];
                row_j[i] = T::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        let zii = z.get(i, i);
        z.set(i, n - 1, zii);
        z.set(i, i, T::one());
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = z.get(i + 1, k) / h;
            }
            for j in 0..=i {
                let g = {
                    let (a, b) = (z.row(i + 1), z.row(j));
                    let mut g = T::zero();
                    for k in 0..=i {
                        g += a[k] * b[k];
                    }
                    g
                };
                let row_j = z.row_mut(j);
                for k in 0..=i {
                    row_j[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            z.set(i + 1, k, T::zero());
        }
    }
    for j in 0..n {
        d[j] = z.get(j, n - 1);
        z.set(j, n - 1, T::zero());
    }
    z.set(n - 1, n - 1, T::one());
    e[0] = T::zero();
}

/// Implicit-shift QL on the tridiagonal `(d, e)`, rotating rows of `z`.
fn ql_implicit<T: Scalar>(
    z: &mut DenseMatrix<T>,
    d: &mut [T],
    e: &mut [T],
) -> Result<(), LinalgError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(LinalgError::NoConvergence {
                        iterations: iter - 1,
                        residual: e[l].abs().as_f64(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(z, i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

#[inline]
fn rotate_rows<T: Scalar>(z: &mut DenseMatrix<T>, i: usize, s: T, c: T) {
    let n = z.cols();
    let data = z.as_mut_slice();
    let (head, tail) = data.split_at_mut((i + 1) * n);
    let zi = &mut head[i * n..];
    let zi1 = &mut tail[..n];
    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}
