use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::model::ModelParameters;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub first_moment: ModelParameters<T>,
    pub second_moment: ModelParameters<T>,
    pub config: AdamConfig,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &ModelParameters<T>, config: AdamConfig) -> Self {
        Self {
            step: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            config,
        }
    }
}

/// One bias-corrected Adam update. Weight decay enters as `λ w` added to the
/// gradient before the moment updates.
pub fn adam_step<T: Scalar>(
    state: &mut OptimizerState<T>,
    params: &mut ModelParameters<T>,
    grads: &ModelParameters<T>,
) -> Result<(), TrainError> {
    for (k, g) in grads.tensors().iter().enumerate() {
        if !g.is_finite() {
            return Err(TrainError::NonFiniteGradient(grads.tensor_name(k)));
        }
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let bias1 = T::lit(1.0 - c.beta1.powi(t));
    let bias2 = T::lit(1.0 - c.beta2.powi(t));
    let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
    let (one_b1, one_b2) = (T::lit(1.0 - c.beta1), T::lit(1.0 - c.beta2));
    let (lr, eps, wd) = (T::lit(c.learning_rate), T::lit(c.epsilon), T::lit(c.weight_decay));

    let grads = grads.tensors();
    let ms = state.first_moment.tensors_mut();
    let vs = state.second_moment.tensors_mut();
    for (((w, g), m), v) in params.tensors_mut().into_iter().zip(grads).zip(ms).zip(vs) {
        let it = w
            .as_mut_slice()
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice())
            .zip(v.as_mut_slice());
        for (((w, &g), m), v) in it {
            let g = g + wd * *w;
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn scalar_params(x: f64) -> ModelParameters<f64> {
        ModelParameters {
            input: DenseMatrix::from_rows(&[&[x]]),
            layers: vec![],
            output: DenseMatrix::from_rows(&[&[x]]),
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar_params(0.5);
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut st = OptimizerState::new(&p, cfg);
        adam_step(&mut st, &mut p, &scalar_params(1.0)).unwrap();
        // m̂/√v̂ = 1, so Δw = −lr · 1/(1 + ε)
        let expected = 0.5 - 1e-3 / (1.0 + 1e-8);
        assert!((p.input.get(0, 0) - expected).abs() < 1e-15);
        assert!((p.input.get(0, 0) - 0.499).abs() < 1e-10);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_weights_and_decays_moments() {
        let mut p = scalar_params(0.5);
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut st = OptimizerState::new(&p, cfg);
        adam_step(&mut st, &mut p, &scalar_params(1.0)).unwrap();
        let (m1, v1) = (st.first_moment.input.get(0, 0), st.second_moment.input.get(0, 0));
        let before = p.clone();
        adam_step(&mut st, &mut p, &scalar_params(0.0)).unwrap();
        assert!((st.first_moment.input.get(0, 0) - 0.9 * m1).abs() < 1e-18);
        assert!((st.second_moment.input.get(0, 0) - 0.999 * v1).abs() < 1e-18);
        // the decayed first moment still moves the weight; with no history it would not
        let mut fresh = scalar_params(0.5);
        let mut st2 = OptimizerState::new(&fresh, cfg);
        adam_step(&mut st2, &mut fresh, &scalar_params(0.0)).unwrap();
        assert_eq!(fresh, scalar_params(0.5));
        assert_ne!(before, p);
        assert_eq!(st.step, 2);
    }

    #[test]
    fn weight_decay_adds_to_gradient() {
        let mut p = scalar_params(2.0);
        let cfg = AdamConfig {
            weight_decay: 0.1,
            ..AdamConfig::default()
        };
        let mut st = OptimizerState::new(&p, cfg);
        adam_step(&mut st, &mut p, &scalar_params(0.0)).unwrap();
        // g = 0.2, first step moves by ≈ lr regardless of magnitude
        assert!((p.input.get(0, 0) - (2.0 - 1e-3)).abs() < 1e-9);
        assert!((st.first_moment.input.get(0, 0) - 0.1 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut p = scalar_params(0.5);
        let mut st = OptimizerState::new(&p, AdamConfig::default());
        let mut g = scalar_params(0.0);
        g.output.set(0, 0, f64::NAN);
        let err = adam_step(&mut st, &mut p, &g).unwrap_err();
        assert_eq!(err.to_string(), "non-finite gradient in output");
        assert_eq!(st.step, 0);
    }
}
