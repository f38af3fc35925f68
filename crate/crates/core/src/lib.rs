//! Deep graph wavelet convolution for semi-supervised node classification.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod data;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod propagation;
mod scalar;
pub mod seed;
pub mod train;
pub mod wavelet;

pub use scalar::Scalar;

pub type DenseMatrix64 = linalg::DenseMatrix<f64>;
pub type SparseMatrix64 = linalg::SparseMatrix<f64>;
pub type Graph64 = graph::Graph<f64>;
pub type LaplacianBundle64 = graph::LaplacianBundle<f64>;
pub type WaveletBasis64 = wavelet::WaveletBasis<f64>;
pub type PropagationOperator64 = propagation::PropagationOperator<f64>;
pub type ModelParameters64 = model::ModelParameters<f64>;
pub type ForwardTrace64 = model::ForwardTrace<f64>;
