use serde::{Deserialize, Serialize};

use super::param::{Matrix, Parameterized};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam. Moment buffers are created lazily and matched to
/// parameters by visitation order, so one optimizer must always be used
/// with the same module.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    moments: Vec<(Matrix, Matrix)>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from the gradients currently stored in `module`.
    pub fn step<M: Parameterized + ?Sized>(&mut self, module: &mut M) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let moments = &mut self.moments;
        let mut i = 0;
        module.visit_mut("", &mut |_, p| {
            if moments.len() <= i {
                moments.push((Matrix::zeros(p.value.raw_dim()), Matrix::zeros(p.value.raw_dim())));
            }
            let (m, v) = &mut moments[i];
            ndarray::Zip::from(&mut p.value)
                .and(&p.grad)
                .and(m)
                .and(v)
                .for_each(|w, &g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *w -= learning_rate * m_hat / (v_hat.sqrt() + eps);
                });
            i += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::param::{child, Param, ParamKind};
    use ndarray::array;

    struct One(Param);

    impl Parameterized for One {
        fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
            f(child(prefix, "w"), &self.0);
        }
        fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
            f(child(prefix, "w"), &mut self.0);
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut m = One(Param::new(array![[1.0, -1.0]], ParamKind::Matrix));
        m.0.grad = array![[0.5, -3.0]];
        let mut opt = Adam::new(AdamConfig::with_lr(0.1));
        opt.step(&mut m);
        // With bias correction the first update is lr * sign(g) up to eps.
        assert!((m.0.value[[0, 0]] - 0.9).abs() < 1e-6);
        assert!((m.0.value[[0, 1]] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimises_quadratic() {
        let mut m = One(Param::new(array![[3.0]], ParamKind::Matrix));
        let mut opt = Adam::new(AdamConfig::with_lr(0.05));
        for _ in 0..2000 {
            m.0.grad = &m.0.value * 2.0;
            opt.step(&mut m);
        }
        assert!(m.0.value[[0, 0]].abs() < 1e-2);
    }
}
