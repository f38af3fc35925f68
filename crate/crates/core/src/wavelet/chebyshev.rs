use rayon::prelude::*;

use super::{check_params, WaveletBasis, WaveletError, WaveletMethod};
use crate::graph::LaplacianBundle;
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::Scalar;

/// Upper bound of the normalized-Laplacian spectrum; `[0, LAMBDA_MAX]` is
/// mapped onto `[-1, 1]`.
pub const LAMBDA_MAX: f64 = 2.0;

/// Number of basis columns expanded together.
const COLUMN_BLOCK: usize = 64;

/// Chebyshev coefficients `c_0..=c_order` of `g` on `[0, LAMBDA_MAX]`, by the
/// cosine quadrature rule at `order + 1` Chebyshev nodes. The expansion is
/// `c_0 / 2 + Σ_{k≥1} c_k T_k(x)` with `x = 2λ / LAMBDA_MAX − 1`.
pub fn chebyshev_coefficients(g: impl Fn(f64) -> f64, order: usize) -> Vec<f64> {
    let nodes = order + 1;
    let half = LAMBDA_MAX / 2.0;
    let samples: Vec<(f64, f64)> = (0..nodes)
        .map(|j| {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / nodes as f64;
            (theta, g(half * (theta.cos() + 1.0)))
        })
        .collect();
    (0..=order)
        .map(|k| {
            let sum: f64 = samples
                .iter()
                .map(|&(theta, gv)| gv * (k as f64 * theta).cos())
                .sum();
            2.0 * sum / nodes as f64
        })
        .collect()
}

/// Evaluates the truncated expansion at a scalar `λ`.
pub fn chebyshev_eval(coeffs: &[f64], lambda: f64) -> f64 {
    let x = 2.0 * lambda / LAMBDA_MAX - 1.0;
    let (mut t_prev, mut t_cur) = (1.0, x);
    let mut acc = coeffs[0] / 2.0;
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        if k > 1 {
            let t_next = 2.0 * x * t_cur - t_prev;
            t_prev = t_cur;
            t_cur = t_next;
        }
        acc += c * t_cur;
    }
    acc
}

/// Approximates `ψ_s` and `ψ_{-s}` by order-`order` Chebyshev expansions of
/// `e^{∓sλ}` applied to the Laplacian, one block of basis columns at a time.
///
/// Both bases are symmetric, so the expanded columns are written out as CSR
/// rows directly. Thresholding happens per column after the full expansion.
pub fn wavelet_chebyshev<T: Scalar>(
    bundle: &LaplacianBundle<T>,
    s: f64,
    t: f64,
    order: usize,
) -> Result<WaveletBasis<T>, WaveletError> {
    check_params(s, t)?;
    if order == 0 {
        return Err(WaveletError::ZeroOrder);
    }
    let n = bundle.num_nodes();
    let fwd: Vec<T> = chebyshev_coefficients(|l| (-s * l).exp(), order)
        .into_iter()
        .map(T::lit)
        .collect();
    let inv: Vec<T> = chebyshev_coefficients(|l| (s * l).exp(), order)
        .into_iter()
        .map(T::lit)
        .collect();

    // x = λ − 1 for LAMBDA_MAX = 2: shifted operator L − I
    let scale = T::lit(2.0 / LAMBDA_MAX);
    let shifted = bundle
        .laplacian
        .add_scaled(scale, &SparseMatrix::identity(n), -T::one())?;

    let threshold = T::lit(t);
    let blocks: Vec<usize> = (0..n).step_by(COLUMN_BLOCK).collect();
    let pieces: Vec<_> = blocks
        .par_iter()
        .map(|&start| {
            let end = (start + COLUMN_BLOCK).min(n);
            expand_block(&shifted, &fwd, &inv, start, end, threshold)
        })
        .collect();

    let mut psi = CsrBuilder::new(n);
    let mut psi_inv = CsrBuilder::new(n);
    for (a, b) in pieces {
        psi.extend(a);
        psi_inv.extend(b);
    }
    Ok(WaveletBasis::new(
        psi.finish(n)?,
        psi_inv.finish(n)?,
        s,
        t,
        WaveletMethod::Chebyshev { order },
    ))
}

type RowEntries<T> = Vec<(Vec<usize>, Vec<T>)>;

fn expand_block<T: Scalar>(
    op: &SparseMatrix<T>,
    fwd: &[T],
    inv: &[T],
    start: usize,
    end: usize,
    threshold: T,
) -> (RowEntries<T>, RowEntries<T>) {
    let n = op.rows();
    let width = end - start;
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let mut t_prev = DenseMatrix::zeros(n, width);
    for c in 0..width {
        t_prev.set(start + c, c, T::one());
    }
    let mut acc_fwd = t_prev.scale(fwd[0] * half);
    let mut acc_inv = t_prev.scale(inv[0] * half);
    if fwd.len() > 1 {
        let mut t_cur = op.spmm(&t_prev).expect("square operator");
        acc_fwd.axpy(fwd[1], &t_cur).expect("same shape");
        acc_inv.axpy(inv[1], &t_cur).expect("same shape");
        for k in 2..fwd.len() {
            let mut t_next = op.spmm(&t_cur).expect("square operator");
            for (x, &p) in t_next.as_mut_slice().iter_mut().zip(t_prev.as_slice()) {
                *x = two * *x - p;
            }
            acc_fwd.axpy(fwd[k], &t_next).expect("same shape");
            acc_inv.axpy(inv[k], &t_next).expect("same shape");
            t_prev = t_cur;
            t_cur = t_next;
        }
    }
    (
        columns_as_rows(&acc_fwd, threshold),
        columns_as_rows(&acc_inv, threshold),
    )
}

fn columns_as_rows<T: Scalar>(block: &DenseMatrix<T>, threshold: T) -> RowEntries<T> {
    let (n, width) = block.shape();
    let mut out: RowEntries<T> = vec![(Vec::new(), Vec::new()); width];
    for i in 0..n {
        for (c, &v) in block.row(i).iter().enumerate() {
            if v != T::zero() && v.abs() >= threshold {
                out[c].0.push(i);
                out[c].1.push(v);
            }
        }
    }
    out
}

struct CsrBuilder<T> {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrBuilder<T> {
    fn new(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        Self {
            offsets,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    fn extend(&mut self, rows: RowEntries<T>) {
        for (idx, val) in rows {
            self.indices.extend(idx);
            self.values.extend(val);
            self.offsets.push(self.indices.len());
        }
    }

    fn finish(self, n: usize) -> Result<SparseMatrix<T>, WaveletError> {
        Ok(SparseMatrix::from_csr(
            n,
            n,
            self.offsets,
            self.indices,
            self.values,
        )?)
    }
}
