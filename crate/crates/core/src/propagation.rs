//! The combined operator `P' = γ ψ_s F ψ_s⁻¹ + (1 − γ) P̃` with a static
//! scalar filter `F = f I`.

use thiserror::Error;

use crate::graph::LaplacianBundle;
use crate::linalg::{DenseMatrix, LinalgError, SparseMatrix};
use crate::wavelet::WaveletBasis;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("gamma must lie in [0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error("gamma = {0} > 0 requires a wavelet basis")]
    MissingBasis(f64),
    #[error("filter constant must be finite and positive, got {0}")]
    InvalidFilter(f64),
    #[error("wavelet basis has {basis} nodes but the graph has {graph}")]
    SizeMismatch { basis: usize, graph: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Diagonal constant of the static filter `F = f I`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterConfig {
    f: f64,
}

impl FilterConfig {
    pub fn new(f: f64) -> Result<Self, PropagationError> {
        if !(f.is_finite() && f > 0.0) {
            return Err(PropagationError::InvalidFilter(f));
        }
        Ok(Self { f })
    }

    pub fn value(&self) -> f64 {
        self.f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FourierOnly,
    WaveletOnly,
    Combined,
    /// Built directly from a caller-supplied matrix.
    Custom,
}

#[derive(Clone, Debug)]
pub struct PropagationOperator<T> {
    pub matrix: SparseMatrix<T>,
    pub gamma: f64,
    pub filter: FilterConfig,
    pub provenance: Provenance,
    symmetric: bool,
}

impl<T: Scalar> PropagationOperator<T> {
    /// Wraps an arbitrary square matrix, e.g. an identity operator in tests.
    pub fn from_matrix(matrix: SparseMatrix<T>) -> Result<Self, PropagationError> {
        if matrix.rows() != matrix.cols() {
            return Err(LinalgError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            }
            .into());
        }
        let symmetric = matrix.max_asymmetry() == T::zero();
        Ok(Self {
            matrix,
            gamma: 0.0,
            filter: FilterConfig { f: 1.0 },
            provenance: Provenance::Custom,
            symmetric,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.rows()
    }

    /// `P' h`
    pub fn apply(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
        self.matrix.spmm(h)
    }

    /// `P'^T h`
    pub fn apply_transpose(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
        if self.symmetric {
            self.matrix.spmm(h)
        } else {
            self.matrix.spmm_transpose(h)
        }
    }

    pub fn density(&self) -> f64 {
        self.matrix.density()
    }

    /// Drops entries with `|v| < cutoff`. Magnitude thresholding keeps a
    /// symmetric matrix symmetric.
    pub fn sparsified(mut self, cutoff: f64) -> Result<Self, PropagationError> {
        if !(cutoff >= 0.0 && cutoff.is_finite()) {
            return Err(LinalgError::InvalidThreshold(cutoff).into());
        }
        self.matrix = self.matrix.drop_below(T::lit(cutoff));
        Ok(self)
    }
}

/// Builds `P'`. The wavelet product `ψ_s ψ_s⁻¹` is formed first and scaled
/// by `γ f` afterwards; the sum is symmetrized as `(M + M^T) / 2` and only
/// explicit zeros are dropped.
pub fn assemble<T: Scalar>(
    bundle: &LaplacianBundle<T>,
    basis: Option<&WaveletBasis<T>>,
    gamma: f64,
    filter: FilterConfig,
) -> Result<PropagationOperator<T>, PropagationError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(PropagationError::GammaOutOfRange(gamma));
    }
    let fourier = &bundle.renorm_propagation;
    let n = fourier.rows();
    let combined = if gamma > 0.0 {
        let basis = basis.ok_or(PropagationError::MissingBasis(gamma))?;
        if basis.num_nodes() != n {
            return Err(PropagationError::SizeMismatch {
                basis: basis.num_nodes(),
                graph: n,
            });
        }
        let pair = basis.psi.matmul(&basis.psi_inverse)?;
        pair.add_scaled(T::lit(gamma * filter.f), fourier, T::lit(1.0 - gamma))?
    } else {
        fourier.clone()
    };
    let matrix = combined.symmetrize()?.drop_zeros();
    let provenance = if gamma == 0.0 {
        Provenance::FourierOnly
    } else if gamma == 1.0 {
        Provenance::WaveletOnly
    } else {
        Provenance::Combined
    };
    Ok(PropagationOperator {
        matrix,
        gamma,
        filter,
        provenance,
        symmetric: true,
    })
}

/// `max |γ (ψ F ψ⁻¹) − γ f (ψ ψ⁻¹)|` with `F = f I` applied as an explicit
/// diagonal factor on the left-hand side.
pub fn scalar_absorption_check<T: Scalar>(
    basis: &WaveletBasis<T>,
    gamma: f64,
    f: f64,
) -> Result<f64, PropagationError> {
    let n = basis.num_nodes();
    let filter = SparseMatrix::from_diagonal(&vec![T::lit(f); n]);
    let lhs = basis
        .psi
        .matmul(&filter)?
        .matmul(&basis.psi_inverse)?
        .scale(T::lit(gamma));
    let rhs = basis
        .psi
        .matmul(&basis.psi_inverse)?
        .scale(T::lit(gamma * f));
    let diff = lhs.add_scaled(T::one(), &rhs, -T::one())?;
    Ok(diff
        .values()
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.as_f64().abs())))
}
