//! AdamW: Adam with decoupled weight decay.
//!
//! The decay term `lr * weight_decay * theta` is subtracted from the
//! parameter directly and never enters the moment estimates, so a parameter
//! with zero gradient still shrinks geometrically when decay is enabled.

use crate::scalar::Scalar;

use super::{GradError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Optimizer state: first/second moment per parameter plus a shared step
/// counter. Moments are lazily initialized from the first `step` call and
/// shape-checked on every subsequent call.
pub struct AdamW<S> {
    cfg: AdamWConfig,
    step_count: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> AdamW<S> {
    pub fn new(cfg: AdamWConfig) -> Self {
        Self {
            cfg,
            step_count: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.cfg
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Apply one update. `params` and `grads` must be aligned; shapes must
    /// match the state captured on the first call.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<S>],
        grads: &[Tensor<S>],
    ) -> Result<(), GradError> {
        if params.len() != grads.len() {
            return Err(GradError::ParamCountMismatch {
                expected: params.len(),
                got: grads.len(),
            });
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            self.v = self.m.clone();
        } else if self.m.len() != params.len() {
            return Err(GradError::ParamCountMismatch {
                expected: self.m.len(),
                got: params.len(),
            });
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(GradError::ShapeMismatch {
                    op: "adamw_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
        }

        self.step_count += 1;
        let t = self.step_count;
        let lr = S::from_f64(self.cfg.learning_rate);
        let b1 = S::from_f64(self.cfg.beta1);
        let b2 = S::from_f64(self.cfg.beta2);
        let eps = S::from_f64(self.cfg.epsilon);
        let decay = S::from_f64(self.cfg.weight_decay);
        let one = S::one();
        let bc1 = one - b1.powi(t as i32);
        let bc2 = one - b2.powi(t as i32);

        for idx in 0..params.len() {
            let p = params[idx].data_mut();
            let g = grads[idx].data();
            let m = self.m[idx].data_mut();
            let v = self.v[idx].data_mut();
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (one - b1) * g[j];
                v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] = p[j] - lr * (m_hat / (v_hat.sqrt() + eps)) - lr * decay * p[j];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_zero_decay_is_identity() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = AdamW::<f64>::new(cfg);
        let mut p = Tensor::vector(vec![1.0, -2.0, 0.5]);
        let g = Tensor::zeros(&[3]);
        opt.step(&mut [&mut p], &[g]).unwrap();
        assert_eq!(p.data(), &[1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_grad_with_decay_shrinks_geometrically() {
        let cfg = AdamWConfig::default();
        let mut opt = AdamW::<f64>::new(cfg);
        let mut p = Tensor::vector(vec![2.0]);
        opt.step(&mut [&mut p], &[Tensor::zeros(&[1])]).unwrap();
        let want = 2.0 * (1.0 - cfg.learning_rate * cfg.weight_decay);
        assert!((p.data()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        // theta=1, g=1, defaults. Worked out independently from the update
        // rule: m=0.1, v=0.001, m_hat=m/(1-0.9), v_hat=v/(1-0.999),
        // theta' = theta - lr*m_hat/(sqrt(v_hat)+eps) - lr*wd*theta.
        let cfg = AdamWConfig::default();
        let mut opt = AdamW::<f64>::new(cfg);
        let mut p = Tensor::vector(vec![1.0]);
        opt.step(&mut [&mut p], &[Tensor::vector(vec![1.0])]).unwrap();

        let m = 0.1_f64;
        let v = 0.001_f64;
        let m_hat = m / (1.0 - 0.9_f64);
        let v_hat = v / (1.0 - 0.999_f64);
        let want = 1.0 - 0.0005 * (m_hat / (v_hat.sqrt() + 1e-8)) - 0.0005 * 0.01 * 1.0;
        assert!((p.data()[0] - want).abs() < 1e-15, "{} vs {}", p.data()[0], want);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut opt = AdamW::<f64>::new(AdamWConfig::default());
        let mut p = Tensor::vector(vec![1.0, 2.0]);
        let g = Tensor::zeros(&[3]);
        assert!(opt.step(&mut [&mut p], &[g]).is_err());
    }
}
