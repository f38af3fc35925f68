//! Heat-kernel graph wavelet bases `ψ_s = U e^{-sΛ} U^T` and their inverses
//! `ψ_{-s}`, computed exactly from an eigendecomposition or approximately by
//! a Chebyshev expansion, then sparsified by magnitude.

mod cache;
mod chebyshev;

use thiserror::Error;

use crate::graph::LaplacianBundle;
use crate::linalg::{eigh_sym, LinalgError, SparseMatrix, SymmetricEigen};
use crate::Scalar;

pub use cache::{load_basis, save_basis, BasisKey};
pub use chebyshev::{chebyshev_coefficients, chebyshev_eval, wavelet_chebyshev};

#[derive(Debug, Error)]
pub enum WaveletError {
    #[error("wavelet scale must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("threshold must be finite and non-negative, got {0}")]
    InvalidThreshold(f64),
    #[error("Chebyshev order must be at least 1")]
    ZeroOrder,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("basis cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed basis cache: {0}")]
    BadCache(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WaveletMethod {
    Exact,
    Chebyshev { order: usize },
}

impl std::fmt::Display for WaveletMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WaveletMethod::Exact => write!(f, "exact"),
            WaveletMethod::Chebyshev { order } => write!(f, "cheby:{order}"),
        }
    }
}

impl std::str::FromStr for WaveletMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(Self::Exact);
        }
        match s.strip_prefix("cheby:").map(str::parse::<usize>) {
            Some(Ok(order)) if order > 0 => Ok(Self::Chebyshev { order }),
            _ => Err(format!("unknown wavelet method '{s}' (expected exact or cheby:<order>)")),
        }
    }
}

/// A sparsified pair `(ψ_s, ψ_{-s})`.
#[derive(Clone, Debug)]
pub struct WaveletBasis<T> {
    pub psi: SparseMatrix<T>,
    pub psi_inverse: SparseMatrix<T>,
    pub scale: f64,
    pub threshold: f64,
    pub density_psi: f64,
    pub density_psi_inverse: f64,
    pub method: WaveletMethod,
}

impl<T: Scalar> WaveletBasis<T> {
    pub(crate) fn new(
        psi: SparseMatrix<T>,
        psi_inverse: SparseMatrix<T>,
        scale: f64,
        threshold: f64,
        method: WaveletMethod,
    ) -> Self {
        Self {
            density_psi: psi.density(),
            density_psi_inverse: psi_inverse.density(),
            psi,
            psi_inverse,
            scale,
            threshold,
            method,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.psi.rows()
    }
}

pub(crate) fn check_params(s: f64, t: f64) -> Result<(), WaveletError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(WaveletError::InvalidScale(s));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(WaveletError::InvalidThreshold(t));
    }
    Ok(())
}

/// Exact bases from a fresh eigendecomposition of the Laplacian.
pub fn wavelet_exact<T: Scalar>(
    bundle: &LaplacianBundle<T>,
    s: f64,
    t: f64,
) -> Result<WaveletBasis<T>, WaveletError> {
    check_params(s, t)?;
    let eig = eigh_sym(&bundle.laplacian_dense())?;
    wavelet_from_eigen(&eig, s, t)
}

/// Exact bases from a precomputed eigendecomposition, so several `(s, t)`
/// pairs can share one factorization.
pub fn wavelet_from_eigen<T: Scalar>(
    eig: &SymmetricEigen<T>,
    s: f64,
    t: f64,
) -> Result<WaveletBasis<T>, WaveletError> {
    check_params(s, t)?;
    let s_t = T::lit(s);
    let threshold = T::lit(t);
    let psi = eig.reconstruct_with(|lambda| (-s_t * lambda).exp());
    let psi_inv = eig.reconstruct_with(|lambda| (s_t * lambda).exp());
    Ok(WaveletBasis::new(
        SparseMatrix::from_dense(&psi, threshold),
        SparseMatrix::from_dense(&psi_inv, threshold),
        s,
        t,
        WaveletMethod::Exact,
    ))
}

/// Density and inverse-pair residual of a (possibly sparsified) basis.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BasisStats {
    pub density_psi: f64,
    pub density_psi_inverse: f64,
    /// `max_{i≠j} |(ψ_s ψ_{-s})_ij|`
    pub max_offdiag_residual: f64,
    /// `max_i |(ψ_s ψ_{-s})_ii − 1|`
    pub max_diag_residual: f64,
}

pub fn basis_stats<T: Scalar>(basis: &WaveletBasis<T>) -> Result<BasisStats, WaveletError> {
    let prod = basis.psi.matmul(&basis.psi_inverse)?;
    let mut off = 0.0f64;
    let mut diag = vec![0.0f64; prod.rows()];
    for i in 0..prod.rows() {
        let (idx, vals) = prod.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            if i == j {
                diag[i] = v.as_f64();
            } else {
                off = off.max(v.as_f64().abs());
            }
        }
    }
    let diag_res = diag.iter().fold(0.0f64, |a, &d| a.max((d - 1.0).abs()));
    Ok(BasisStats {
        density_psi: basis.density_psi,
        density_psi_inverse: basis.density_psi_inverse,
        max_offdiag_residual: off,
        max_diag_residual: diag_res,
    })
}
