//! Bias-corrected Adam, shared by the recurrent and tabular networks.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !open_unit(self.beta1) || !open_unit(self.beta2) {
            return Err(ModelError::InvalidConfig(format!(
                "betas must lie in (0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(ModelError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }
}

/// One in-place update of `params` against `grads`.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, config: &AdamConfig) {
    assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
    assert_eq!(params.len(), state.m.len(), "optimizer state has the wrong size");
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - config.beta1.powi(t);
    let c2 = 1.0 - config.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = config.beta1 * *m + (1.0 - config.beta1) * g;
        *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let config = AdamConfig::default();
        let mut p = vec![0.5, -0.2];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[1.0, -3.0], &mut s, &config);
        // m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
        let expected = 0.001 * 1.0 / (1.0 + 1e-8);
        assert!((0.5 - p[0] - expected).abs() < 1e-15);
        assert!((p[1] + 0.2 - 0.001 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let config = AdamConfig::default();
        let mut p = vec![1.0, 2.0, 3.0];
        let mut s = AdamState::new(3);
        for _ in 0..50 {
            adam_step(&mut p, &[0.0; 3], &mut s, &config);
        }
        assert_eq!(p, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.t, 50);
    }

    #[test]
    fn step_opposes_first_moment() {
        let config = AdamConfig::default();
        let mut p = vec![0.0; 4];
        let mut s = AdamState::new(4);
        let grads = [[0.3, -1.0, 2.0, -0.1], [-0.5, -0.2, 1.0, 0.4], [0.1, 0.1, -4.0, 0.0]];
        for g in grads {
            let before = p.clone();
            adam_step(&mut p, &g, &mut s, &config);
            for i in 0..4 {
                let delta = p[i] - before[i];
                if s.m[i] != 0.0 {
                    assert!(delta * s.m[i] < 0.0);
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        let bad = AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdamConfig {
            learning_rate: f64::NAN,
            ..AdamConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
