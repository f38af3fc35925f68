//! The deep graph wavelet convolutional network: an input projection, a
//! stack of propagation layers with initial residual and identity mapping,
//! an output projection and a row-wise log-softmax.

mod checkpoint;
mod config;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError, SparseMatrix};
use crate::propagation::PropagationOperator;
use crate::Scalar;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{beta_schedule, reduction_mode, BetaOverride, ModelConfig, ReductionMode};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("layer index must be at least 1")]
    LayerIndexZero,
    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("non-finite activations in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    BadCheckpoint(String),
}

impl PartialEq for ModelError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Trainable weights: input projection `p×d`, one `d×d` matrix per layer,
/// output projection `d×C`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters<T> {
    pub input: DenseMatrix<T>,
    pub layers: Vec<DenseMatrix<T>>,
    pub output: DenseMatrix<T>,
}

impl<T: Scalar> ModelParameters<T> {
    /// Glorot-uniform initialization from a seeded stream.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| T::lit(rng.gen_range(-limit..limit)))
        };
        let input = glorot(config.input_dim, config.hidden);
        let layers = (0..config.layers)
            .map(|_| glorot(config.hidden, config.hidden))
            .collect();
        let output = glorot(config.hidden, config.classes);
        Self {
            input,
            layers,
            output,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            input: DenseMatrix::zeros(self.input.rows(), self.input.cols()),
            layers: self
                .layers
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            output: DenseMatrix::zeros(self.output.rows(), self.output.cols()),
        }
    }

    /// All tensors in a fixed order: input, layers, output.
    pub fn tensors(&self) -> Vec<&DenseMatrix<T>> {
        std::iter::once(&self.input)
            .chain(self.layers.iter())
            .chain(std::iter::once(&self.output))
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix<T>> {
        std::iter::once(&mut self.input)
            .chain(self.layers.iter_mut())
            .chain(std::iter::once(&mut self.output))
            .collect()
    }

    /// Name of the tensor at position `k` of [`Self::tensors`].
    pub fn tensor_name(&self, k: usize) -> String {
        if k == 0 {
            "input".into()
        } else if k <= self.layers.len() {
            format!("layer[{}]", k)
        } else {
            "output".into()
        }
    }

    pub fn num_weights(&self) -> usize {
        self.tensors().iter().map(|t| t.as_slice().len()).sum()
    }

    pub fn check_shapes(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let expect = |what: &str, m: &DenseMatrix<T>, shape: (usize, usize)| {
            if m.shape() != shape {
                Err(ModelError::Shape {
                    what: what.into(),
                    expected: shape,
                    got: m.shape(),
                })
            } else {
                Ok(())
            }
        };
        expect("input weights", &self.input, (config.input_dim, config.hidden))?;
        if self.layers.len() != config.layers {
            return Err(ModelError::Shape {
                what: "layer count".into(),
                expected: (config.layers, 0),
                got: (self.layers.len(), 0),
            });
        }
        for (l, w) in self.layers.iter().enumerate() {
            expect(&format!("layer[{}] weights", l + 1), w, (config.hidden, config.hidden))?;
        }
        expect("output weights", &self.output, (config.hidden, config.classes))
    }
}

/// Activations recorded by [`forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    /// `H⁰` after ReLU and dropout.
    pub h0: DenseMatrix<T>,
    /// Per layer `l`: the mixed input `(1−α) P' H + α H⁰`.
    pub supports: Vec<DenseMatrix<T>>,
    /// Per layer `l`: `H^l` after ReLU.
    pub hidden: Vec<DenseMatrix<T>>,
    pub logits: DenseMatrix<T>,
    pub log_probs: DenseMatrix<T>,
    /// Dropout multiplier (`0` or `1/(1−p)`) applied to `H⁰`.
    pub h0_mask: Option<Vec<T>>,
    /// Per layer `l ≥ 2`: dropout multiplier applied to `H^{l−1}` before
    /// propagation. Entry 0 is always `None`: layer 1 consumes `H⁰`, which
    /// has already been dropped.
    pub layer_masks: Vec<Option<Vec<T>>>,
    pub betas: Vec<f64>,
}

impl<T: Scalar> ForwardTrace<T> {
    /// Final hidden representation `H^L`.
    pub fn embeddings(&self) -> &DenseMatrix<T> {
        self.hidden.last().unwrap_or(&self.h0)
    }

    /// Row-wise argmax of the log-probabilities, ties to the lowest class.
    pub fn predictions(&self) -> Vec<usize> {
        (0..self.log_probs.rows())
            .map(|i| argmax(self.log_probs.row(i)))
            .collect()
    }
}

pub(crate) fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// `σ((1−α) P' h + α h0) (β W + (1−β) I)` with σ = ReLU.
pub fn layer_forward<T: Scalar>(
    h: &DenseMatrix<T>,
    h0: &DenseMatrix<T>,
    op: &PropagationOperator<T>,
    w: &DenseMatrix<T>,
    alpha: f64,
    beta: f64,
) -> Result<DenseMatrix<T>, ModelError> {
    Ok(layer_forward_parts(h, h0, op, w, alpha, beta)?.1)
}

/// Returns `(support, output)`.
fn layer_forward_parts<T: Scalar>(
    h: &DenseMatrix<T>,
    h0: &DenseMatrix<T>,
    op: &PropagationOperator<T>,
    w: &DenseMatrix<T>,
    alpha: f64,
    beta: f64,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>), ModelError> {
    if h.shape() != h0.shape() {
        return Err(ModelError::Shape {
            what: "initial residual".into(),
            expected: h.shape(),
            got: h0.shape(),
        });
    }
    if w.shape() != (h.cols(), h.cols()) {
        return Err(ModelError::Shape {
            what: "layer weights".into(),
            expected: (h.cols(), h.cols()),
            got: w.shape(),
        });
    }
    let mut support = op.apply(h)?;
    let (keep, mix) = (T::lit(1.0 - alpha), T::lit(alpha));
    for (s, &x0) in support.as_mut_slice().iter_mut().zip(h0.as_slice()) {
        *s = keep * *s + mix * x0;
    }
    let effective = identity_mapped(w, beta);
    let out = support.matmul(&effective)?.map(relu);
    Ok((support, out))
}

/// `β W + (1 − β) I`
pub(crate) fn identity_mapped<T: Scalar>(w: &DenseMatrix<T>, beta: f64) -> DenseMatrix<T> {
    let (b, rest) = (T::lit(beta), T::lit(1.0 - beta));
    let mut out = w.scale(b);
    for i in 0..w.rows().min(w.cols()) {
        let v = out.get(i, i) + rest;
        out.set(i, i, v);
    }
    out
}

#[inline]
fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Numerically stable row-wise log-softmax.
pub fn log_softmax<T: Scalar>(y: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut z = y.clone();
    for i in 0..z.rows() {
        let row = z.row_mut(i);
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    z
}

fn dropout_mask<T: Scalar>(rng: &mut ChaCha8Rng, len: usize, rate: f64) -> Vec<T> {
    let scale = T::lit(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| {
            if rng.gen::<f64>() < rate {
                T::zero()
            } else {
                scale
            }
        })
        .collect()
}

fn ensure_finite<T: Scalar>(m: &DenseMatrix<T>, what: impl FnOnce() -> String) -> Result<(), ModelError> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what()))
    }
}

/// Full forward pass. Dropout is active only in [`Mode::Train`]; its masks
/// are drawn from a stream seeded with `seed` and recorded in the trace.
pub fn forward<T: Scalar>(
    features: &SparseMatrix<T>,
    params: &ModelParameters<T>,
    config: &ModelConfig,
    op: &PropagationOperator<T>,
    mode: Mode,
    seed: u64,
) -> Result<ForwardTrace<T>, ModelError> {
    config.validate()?;
    params.check_shapes(config)?;
    if features.cols() != config.input_dim {
        return Err(ModelError::Shape {
            what: "features".into(),
            expected: (features.rows(), config.input_dim),
            got: features.shape(),
        });
    }
    if op.num_nodes() != features.rows() {
        return Err(ModelError::Shape {
            what: "propagation operator".into(),
            expected: (features.rows(), features.rows()),
            got: op.matrix.shape(),
        });
    }
    let use_dropout = mode == Mode::Train && config.dropout > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut h0 = features.spmm(&params.input)?.map(relu);
    let h0_mask = if use_dropout {
        let mask = dropout_mask(&mut rng, h0.as_slice().len(), config.dropout);
        for (x, &m) in h0.as_mut_slice().iter_mut().zip(&mask) {
            *x *= m;
        }
        Some(mask)
    } else {
        None
    };
    ensure_finite(&h0, || "input projection".into())?;

    let mut supports = Vec::with_capacity(config.layers);
    let mut hidden: Vec<DenseMatrix<T>> = Vec::with_capacity(config.layers);
    let mut layer_masks = Vec::with_capacity(config.layers);
    let mut betas = Vec::with_capacity(config.layers);
    for (idx, w) in params.layers.iter().enumerate() {
        let l = idx + 1;
        let beta = config.beta(l)?;
        let (input, mask) = match hidden.last() {
            None => (None, None),
            Some(prev) if use_dropout => {
                let mask = dropout_mask(&mut rng, prev.as_slice().len(), config.dropout);
                let mut dropped = prev.clone();
                for (x, &m) in dropped.as_mut_slice().iter_mut().zip(&mask) {
                    *x *= m;
                }
                (Some(dropped), Some(mask))
            }
            Some(_) => (None, None),
        };
        let h_in = input.as_ref().or(hidden.last()).unwrap_or(&h0);
        let (support, out) = layer_forward_parts(h_in, &h0, op, w, config.alpha, beta)?;
        ensure_finite(&out, || format!("layer {l}"))?;
        supports.push(support);
        hidden.push(out);
        layer_masks.push(mask);
        betas.push(beta);
    }

    let last = hidden.last().unwrap_or(&h0);
    let logits = last.matmul(&params.output)?;
    ensure_finite(&logits, || "output projection".into())?;
    let log_probs = log_softmax(&logits);
    Ok(ForwardTrace {
        h0,
        supports,
        hidden,
        logits,
        log_probs,
        h0_mask,
        layer_masks,
        betas,
    })
}
