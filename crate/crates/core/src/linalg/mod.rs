//! Dense and sparse real linear algebra.

mod dense;
mod eigen;
mod error;
mod sparse;

pub use dense::{frobenius_rel_error, DenseMatrix};
pub use eigen::{eigh_sym, SymmetricEigen, SYMMETRY_TOLERANCE};
pub use error::LinalgError;
pub use sparse::{density, spmm, threshold_sparsify, SparseMatrix};
