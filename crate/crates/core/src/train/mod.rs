//! Loss, exact gradients, Adam, finite-difference verification and the
//! early-stopped training loop.

mod adam;
mod backward;
mod gradcheck;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DatasetSplit;
use crate::linalg::{DenseMatrix, LinalgError, SparseMatrix};
use crate::model::{forward, reduction_mode, Mode, ModelConfig, ModelError, ModelParameters};
use crate::propagation::PropagationOperator;
use crate::seed::derive_seed;
use crate::Scalar;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use backward::backward;
pub use gradcheck::{
    gradient_check, gradient_check_suite, random_instance, GradCheckOptions, GradCheckReport,
    GradCheckInstance,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss mask is empty")]
    EmptyMask,
    #[error("label {label} of node {node} is not below the class count {classes}")]
    BadLabel {
        node: usize,
        label: usize,
        classes: usize,
    },
    #[error("forward trace does not match the parameters or labels")]
    TraceMismatch,
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("train, validation and test sets overlap")]
    OverlappingSplit,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Wavelet(#[from] crate::wavelet::WaveletError),
    #[error(transparent)]
    Propagation(#[from] crate::propagation::PropagationError),
}

/// Mean of `−Z[i, label_i]` over the masked nodes.
pub fn nll_loss<T: Scalar>(
    log_probs: &DenseMatrix<T>,
    labels: &[usize],
    mask: &[usize],
) -> Result<T, TrainError> {
    if mask.is_empty() {
        return Err(TrainError::EmptyMask);
    }
    let classes = log_probs.cols();
    let mut total = T::zero();
    for &i in mask {
        let label = labels[i];
        if label >= classes {
            return Err(TrainError::BadLabel {
                node: i,
                label,
                classes,
            });
        }
        total -= log_probs.get(i, label);
    }
    Ok(total / T::from_usize_lossy(mask.len()))
}

/// Fraction of masked nodes whose prediction equals the label. An empty
/// mask scores 0.
pub fn accuracy(predictions: &[usize], labels: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let correct = mask
        .iter()
        .filter(|&&i| predictions[i] == labels[i])
        .count();
    correct as f64 / mask.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            max_epochs: 1500,
            patience: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub schedule: Schedule,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            adam: AdamConfig::default(),
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch with the highest validation accuracy (first on ties).
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    /// Test accuracy of the parameters from `best_epoch`.
    pub test_accuracy: f64,
    pub mode: String,
    pub weight_decay: f64,
    pub wall_time_secs: f64,
}

impl PartialEq for TrainReport {
    /// Wall time is excluded: two runs of the same seeded job compare equal.
    fn eq(&self, other: &Self) -> bool {
        self.epochs == other.epochs
            && self.best_epoch == other.best_epoch
            && self.best_validation_accuracy == other.best_validation_accuracy
            && self.test_accuracy == other.test_accuracy
            && self.mode == other.mode
            && self.weight_decay == other.weight_decay
    }
}

/// Trains with Adam and early stopping on validation accuracy. Returns the
/// report and the parameters from the best validation epoch.
pub fn train<T: Scalar>(
    features: &SparseMatrix<T>,
    labels: &[usize],
    split: &DatasetSplit,
    config: &ModelConfig,
    op: &PropagationOperator<T>,
    options: &TrainOptions,
) -> Result<(TrainReport, ModelParameters<T>), TrainError> {
    if !split.is_disjoint() {
        return Err(TrainError::OverlappingSplit);
    }
    let started = Instant::now();
    let mut params = ModelParameters::init(config, derive_seed(options.seed, u64::MAX));
    let mut state = OptimizerState::new(&params, options.adam);
    let mut best_params = params.clone();
    let mut records = Vec::new();
    let (mut best_epoch, mut best_val, mut best_test) = (0usize, f64::NEG_INFINITY, 0.0);

    for epoch in 1..=options.schedule.max_epochs {
        let trace = forward(
            features,
            &params,
            config,
            op,
            Mode::Train,
            derive_seed(options.seed, epoch as u64),
        )?;
        let loss = nll_loss(&trace.log_probs, labels, &split.train)?;
        let grads = backward(&trace, features, labels, &split.train, &params, config, op)?;
        adam_step(&mut state, &mut params, &grads)?;

        let eval = forward(features, &params, config, op, Mode::Eval, 0)?;
        let preds = eval.predictions();
        let val = accuracy(&preds, labels, &split.validation);
        let test = accuracy(&preds, labels, &split.test);
        records.push(EpochRecord {
            epoch,
            train_loss: loss.as_f64(),
            validation_accuracy: val,
            test_accuracy: test,
        });
        if val > best_val {
            best_val = val;
            best_epoch = epoch;
            best_test = test;
            best_params = params.clone();
        } else if epoch - best_epoch >= options.schedule.patience {
            break;
        }
    }

    let report = TrainReport {
        epochs: records,
        best_epoch,
        best_validation_accuracy: best_val.max(0.0),
        test_accuracy: best_test,
        mode: reduction_mode(config).to_string(),
        weight_decay: options.adam.weight_decay,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((report, best_params))
}
