use crate::array::Array;
use crate::error::{AutodiffError, Result};
use crate::params::{GradMap, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Adam with bias correction. Moments are stored per parameter slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Array>,
    pub v: Vec<Array>,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: params.values().iter().map(|p| Array::zeros(p.shape())).collect(),
            v: params.values().iter().map(|p| Array::zeros(p.shape())).collect(),
        }
    }

    /// One update of every slot in `params` using `grads`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &GradMap) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "adam_step",
                left: vec![params.len()],
                right: vec![grads.len()],
            });
        }
        for ((p, g), m) in params.values().iter().zip(grads.arrays()).zip(&self.m) {
            if !p.same_shape(g) || !p.same_shape(m) {
                return Err(AutodiffError::ShapeMismatch {
                    op: "adam_step",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        for (slot, g) in grads.arrays().iter().enumerate() {
            let theta = params.get_mut(slot).data_mut();
            let m = self.m[slot].data_mut();
            let v = self.v[slot].data_mut();
            for i in 0..theta.len() {
                let gi = g.data()[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        if params.values().iter().all(Array::is_finite) {
            Ok(())
        } else {
            Err(AutodiffError::NonFinite { op: "adam_step" })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("theta", Array::scalar(v));
        p
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = scalar_set(0.0);
        let mut adam = AdamState::new(&params, AdamConfig::default());
        adam.step(&mut params, &GradMap::from_arrays(vec![Array::scalar(1.0)]))
            .unwrap();
        let expected = -1e-4 / (1.0 + 1e-8);
        assert!((params.get(0).item() - expected).abs() < 1e-15);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_untouched() {
        let mut params = scalar_set(0.7);
        let mut adam = AdamState::new(&params, AdamConfig::default());
        let zeros = params.zeros_like();
        for _ in 0..3 {
            adam.step(&mut params, &zeros).unwrap();
        }
        assert_eq!(params.get(0).item(), 0.7);
        assert_eq!(adam.step, 3);
    }

    #[test]
    fn ten_steps_on_a_parabola_shrink_theta() {
        // Oracle: the Adam recurrence written out directly for f(θ) = θ².
        let cfg = AdamConfig::with_lr(0.05);
        let (mut theta, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=10 {
            let g = 2.0 * theta;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let mh = m / (1.0 - cfg.beta1.powi(t));
            let vh = v / (1.0 - cfg.beta2.powi(t));
            theta -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        assert!(theta.abs() < 1.0);

        let mut params = scalar_set(1.0);
        let mut adam = AdamState::new(&params, cfg);
        for _ in 0..10 {
            let g = 2.0 * params.get(0).item();
            adam.step(&mut params, &GradMap::from_arrays(vec![Array::scalar(g)]))
                .unwrap();
        }
        assert_eq!(params.get(0).item(), theta);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut params = scalar_set(0.0);
        let mut adam = AdamState::new(&params, AdamConfig::default());
        let bad = GradMap::from_arrays(vec![Array::zeros(&[1, 2])]);
        assert!(adam.step(&mut params, &bad).is_err());
    }
}
