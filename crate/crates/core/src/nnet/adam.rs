//! Bias-corrected Adam on flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer state for one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    /// Standard defaults: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        AdamState {
            step_count: 0,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
        }
    }
}

/// One bias-corrected Adam update, in place. Increments `step_count` by
/// exactly one.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(Error::Shape(format!(
            "adam shapes disagree: params {n}, grads {}, moments {}/{}",
            grads.len(),
            state.first_moment.len(),
            state.second_moment.len()
        )));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    for i in 0..n {
        let g = grads[i];
        let m = b1 * state.first_moment[i] + (1.0 - b1) * g;
        let v = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        params[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = vec![0.3, -1.2, 4.0];
        let g = vec![0.0; 3];
        let mut st = AdamState::new(3, 0.01);
        adam_step(&mut p, &g, &mut st).unwrap();
        assert_eq!(p, vec![0.3, -1.2, 4.0]);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_about_lr_times_sign() {
        // Hand-computed first step: m_hat = g, v_hat = g^2, so the update is
        // lr * g / (|g| + eps) ~= lr * sign(g).
        let lr = 0.005;
        let mut p = vec![1.0, 1.0];
        let g = vec![0.37, -2.4];
        let mut st = AdamState::new(2, lr);
        adam_step(&mut p, &g, &mut st).unwrap();
        let expect0 = 1.0 - lr * 0.37 / (0.37 + 1e-8);
        let expect1 = 1.0 + lr * 2.4 / (2.4 + 1e-8);
        assert!((p[0] - expect0).abs() < 1e-15);
        assert!((p[1] - expect1).abs() < 1e-15);
        assert!((p[0] - (1.0 - lr)).abs() < 1e-7);
        assert!((p[1] - (1.0 + lr)).abs() < 1e-7);
    }

    #[test]
    fn constant_gradient_moves_monotonically_against_it() {
        // Scalar simulation: with g > 0 fixed, every step decreases p.
        let mut p = vec![2.0];
        let g = vec![0.8];
        let mut st = AdamState::new(1, 0.01);
        let mut prev = p[0];
        for _ in 0..200 {
            adam_step(&mut p, &g, &mut st).unwrap();
            assert!(p[0] < prev, "parameter must strictly decrease");
            prev = p[0];
        }
        assert_eq!(st.step_count, 200);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut p = vec![1.0, 2.0];
        let g = vec![0.1];
        let mut st = AdamState::new(2, 0.01);
        assert!(matches!(adam_step(&mut p, &g, &mut st), Err(Error::Shape(_))));
    }
}
