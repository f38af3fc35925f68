use super::TrainError;
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::model::{identity_mapped, ForwardTrace, ModelConfig, ModelParameters};
use crate::propagation::PropagationOperator;
use crate::Scalar;

/// Exact gradients of the masked NLL loss with respect to every weight,
/// replaying the ReLU gates and dropout masks recorded in `trace`.
pub fn backward<T: Scalar>(
    trace: &ForwardTrace<T>,
    features: &SparseMatrix<T>,
    labels: &[usize],
    mask: &[usize],
    params: &ModelParameters<T>,
    config: &ModelConfig,
    op: &PropagationOperator<T>,
) -> Result<ModelParameters<T>, TrainError> {
    if mask.is_empty() {
        return Err(TrainError::EmptyMask);
    }
    params.check_shapes(config)?;
    let (n, classes) = trace.log_probs.shape();
    if trace.hidden.len() != config.layers || n != labels.len() || classes != config.classes {
        return Err(TrainError::TraceMismatch);
    }

    // dLoss/dY = (softmax(Y) − onehot) / |mask| on masked rows
    let inv = T::one() / T::from_usize_lossy(mask.len());
    let mut d_logits = DenseMatrix::zeros(n, classes);
    for &i in mask {
        let row = d_logits.row_mut(i);
        for (r, &z) in row.iter_mut().zip(trace.log_probs.row(i)) {
            *r += z.exp() * inv;
        }
        row[labels[i]] -= inv;
    }

    let last = trace.embeddings();
    let d_output = last.matmul_tn(&d_logits)?;
    let mut d_hidden = d_logits.matmul(&params.output.transpose())?;
    let mut d_h0 = DenseMatrix::zeros(trace.h0.rows(), trace.h0.cols());
    let mut d_layers = vec![DenseMatrix::zeros(0, 0); config.layers];
    let (alpha, keep) = (T::lit(config.alpha), T::lit(1.0 - config.alpha));

    for idx in (0..config.layers).rev() {
        let beta = trace.betas[idx];
        // ReLU gate
        for (g, &h) in d_hidden
            .as_mut_slice()
            .iter_mut()
            .zip(trace.hidden[idx].as_slice())
        {
            if h <= T::zero() {
                *g = T::zero();
            }
        }
        let effective = identity_mapped(&params.layers[idx], beta);
        let d_support = d_hidden.matmul(&effective.transpose())?;
        d_layers[idx] = trace.supports[idx]
            .matmul_tn(&d_hidden)?
            .scale(T::lit(beta));
        d_h0.axpy(alpha, &d_support)?;
        let mut d_input = op.apply_transpose(&d_support)?;
        for x in d_input.as_mut_slice() {
            *x *= keep;
        }
        if idx == 0 {
            d_h0.axpy(T::one(), &d_input)?;
        } else {
            if let Some(m) = &trace.layer_masks[idx] {
                for (x, &s) in d_input.as_mut_slice().iter_mut().zip(m) {
                    *x *= s;
                }
            }
            d_hidden = d_input;
        }
    }

    // back through dropout and ReLU of the input projection; h0 > 0 exactly
    // where the kept pre-activation was positive
    if let Some(m) = &trace.h0_mask {
        for (x, &s) in d_h0.as_mut_slice().iter_mut().zip(m) {
            *x *= s;
        }
    }
    for (g, &h) in d_h0.as_mut_slice().iter_mut().zip(trace.h0.as_slice()) {
        if h <= T::zero() {
            *g = T::zero();
        }
    }
    let d_input = features.spmm_transpose(&d_h0)?;

    Ok(ModelParameters {
        input: d_input,
        layers: d_layers,
        output: d_output,
    })
}
