use serde::{Deserialize, Serialize};

use super::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam over a flattened parameter set.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl Adam {
    pub fn new<P: Parameters>(config: AdamConfig, params: &P) -> Self {
        let n = params.num_params();
        Self {
            config,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update. Gradients are read, never cleared.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        let g = grads.flatten();
        assert_eq!(
            g.len(),
            self.first_moment.len(),
            "gradient/moment size mismatch"
        );
        self.step_count += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let (m, v) = (&mut self.first_moment, &mut self.second_moment);
        let mut k = 0;
        params.visit_mut("", &mut |_, _, p| {
            for x in p.iter_mut() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
                k += 1;
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Linear, Matrix};

    fn layer() -> Linear {
        Linear::from_parts(
            Matrix::from_rows(&[[0.5, -1.0], [2.0, 0.25]]).unwrap(),
            vec![0.1, -0.2],
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = layer();
        let before = p.clone();
        let g = p.zeros_like();
        let mut adam = Adam::new(AdamConfig::default(), &p);
        adam.step(&mut p, &g);
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_matches_formula() {
        // at t=1: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
        let mut p = layer();
        let before = p.flatten();
        let mut g = p.zeros_like();
        let grads = [0.3, -2.0, 1e-3, 5.0, -0.7, 0.0];
        g.assign_flat(&grads);
        let cfg = AdamConfig::default();
        let mut adam = Adam::new(cfg, &p);
        adam.step(&mut p, &g);
        for ((after, b), gi) in p.flatten().iter().zip(&before).zip(&grads) {
            let expected = b - cfg.lr * gi / (gi.abs() + cfg.eps);
            assert!((after - expected).abs() < 1e-15, "{after} vs {expected}");
        }
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = layer();
            let mut g = p.zeros_like();
            g.assign_flat(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
            let mut adam = Adam::new(AdamConfig::default(), &p);
            for _ in 0..10 {
                adam.step(&mut p, &g);
            }
            p.flatten()
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
