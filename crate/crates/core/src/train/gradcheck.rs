//! Central finite-difference verification of [`backward`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{backward, nll_loss, TrainError};
use crate::data::random_graph;
use crate::graph::build_laplacian;
use crate::linalg::SparseMatrix;
use crate::model::{forward, Mode, ModelConfig, ModelParameters, ReductionMode};
use crate::propagation::{assemble, FilterConfig, PropagationOperator};
use crate::wavelet::wavelet_exact;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    pub samples: usize,
    pub step: f64,
    /// Denominator floor for the relative error.
    pub floor: f64,
    /// Scales the analytic gradient by `1 + corrupt` before comparing; a
    /// nonzero value is a negative control that must fail.
    pub corrupt: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            samples: 50,
            step: 1e-5,
            floor: 1e-6,
            corrupt: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub mode: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

/// A small random problem on which the loss is a deterministic function of
/// the weights (dropout masks come from a fixed seed).
pub struct GradCheckInstance {
    pub features: SparseMatrix<f64>,
    pub labels: Vec<usize>,
    pub mask: Vec<usize>,
    pub config: ModelConfig,
    pub op: PropagationOperator<f64>,
    pub params: ModelParameters<f64>,
    pub dropout_seed: u64,
}

/// Random 12-node instance configured to reduce to `mode`.
pub fn random_instance(
    mode: ReductionMode,
    eta: f64,
    seed: u64,
) -> Result<GradCheckInstance, TrainError> {
    let n = 12;
    let (p, classes) = (5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph::<f64>(n, 0.3, p, classes, rng.gen());
    let config = ModelConfig {
        layers: 3,
        hidden: 6,
        alpha: 0.2,
        eta,
        gamma: 0.4,
        filter_f: 0.8,
        scale_s: 1.0,
        threshold_t: 1e-3,
        dropout: 0.3,
        classes,
        input_dim: p,
        beta_override: None,
    }
    .with_mode(mode);
    let bundle = build_laplacian(&graph);
    let basis = if config.gamma > 0.0 {
        Some(wavelet_exact(&bundle, config.scale_s, config.threshold_t)?)
    } else {
        None
    };
    let filter = FilterConfig::new(config.filter_f)?;
    let op = assemble(&bundle, basis.as_ref(), config.gamma, filter)?;
    let features = SparseMatrix::from_dense(graph.features(), 0.0);
    let mut mask: Vec<usize> = sample(&mut rng, n, n / 2).into_vec();
    mask.sort_unstable();
    let params = ModelParameters::init(&config, rng.gen());
    Ok(GradCheckInstance {
        features,
        labels: graph.labels().to_vec(),
        mask,
        config,
        op,
        params,
        dropout_seed: rng.gen(),
    })
}

fn loss_at(inst: &GradCheckInstance, params: &ModelParameters<f64>) -> Result<f64, TrainError> {
    let trace = forward(
        &inst.features,
        params,
        &inst.config,
        &inst.op,
        Mode::Train,
        inst.dropout_seed,
    )?;
    nll_loss(&trace.log_probs, &inst.labels, &inst.mask)
}

/// Compares analytic gradients with `(L(w + h) − L(w − h)) / 2h` on
/// uniformly sampled weights.
pub fn gradient_check(
    inst: &GradCheckInstance,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, TrainError> {
    let trace = forward(
        &inst.features,
        &inst.params,
        &inst.config,
        &inst.op,
        Mode::Train,
        inst.dropout_seed,
    )?;
    let grads = backward(
        &trace,
        &inst.features,
        &inst.labels,
        &inst.mask,
        &inst.params,
        &inst.config,
        &inst.op,
    )?;

    let sizes: Vec<usize> = inst
        .params
        .tensors()
        .iter()
        .map(|t| t.as_slice().len())
        .collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let picks = sample(&mut rng, total, opts.samples.min(total));

    let mut report = GradCheckReport {
        mode: crate::model::reduction_mode(&inst.config).to_string(),
        checked: 0,
        max_rel_error: 0.0,
        max_abs_error: 0.0,
    };
    let mut probe = inst.params.clone();
    for flat in picks.iter() {
        let (mut tensor, mut offset) = (0, flat);
        while offset >= sizes[tensor] {
            offset -= sizes[tensor];
            tensor += 1;
        }
        let analytic = grads.tensors()[tensor].as_slice()[offset] * (1.0 + opts.corrupt);
        let original = inst.params.tensors()[tensor].as_slice()[offset];

        probe.tensors_mut()[tensor].as_mut_slice()[offset] = original + opts.step;
        let plus = loss_at(inst, &probe)?;
        probe.tensors_mut()[tensor].as_mut_slice()[offset] = original - opts.step;
        let minus = loss_at(inst, &probe)?;
        probe.tensors_mut()[tensor].as_mut_slice()[offset] = original;

        let numeric = (plus - minus) / (2.0 * opts.step);
        let abs = (analytic - numeric).abs();
        let rel = abs / analytic.abs().max(numeric.abs()).max(opts.floor);
        report.checked += 1;
        report.max_abs_error = report.max_abs_error.max(abs);
        report.max_rel_error = report.max_rel_error.max(rel);
    }
    Ok(report)
}

/// Runs [`gradient_check`] on one random instance per mode.
pub fn gradient_check_suite(
    modes: &[ReductionMode],
    eta: f64,
    opts: &GradCheckOptions,
) -> Result<Vec<GradCheckReport>, TrainError> {
    modes
        .iter()
        .enumerate()
        .map(|(k, &mode)| {
            let inst = random_instance(mode, eta, crate::seed::derive_seed(opts.seed, k as u64))?;
            gradient_check(&inst, opts)
        })
        .collect()
}
