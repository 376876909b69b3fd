use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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

/// Adam with bias correction over a fixed list of parameter slices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        let shapes_agree = params.len() == self.m.len()
            && grads.len() == self.m.len()
            && params
                .iter()
                .zip(grads)
                .zip(&self.m)
                .all(|((p, g), m)| p.len() == m.len() && g.len() == m.len());
        if !shapes_agree {
            return Err(Error::Shape("adam parameter/gradient/state shapes disagree".into()));
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(AdamConfig::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        s.step(&mut [&mut p], &[&[0.0; 3]]).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_is_lr_regardless_of_scale() {
        for &g in &[0.01, 0.5, 3.0, -40.0, 1e4] {
            let mut s = AdamState::new(AdamConfig::default(), &[1]);
            let mut p = vec![0.0];
            s.step(&mut [&mut p], &[&[g]]).unwrap();
            assert!((p[0].abs() / 1e-3 - 1.0).abs() < 1e-6, "{g}: {}", p[0]);
            assert_eq!(p[0].signum(), -g.signum());
        }
    }

    #[test]
    fn matches_scalar_oracle_on_quadratic() {
        // Independent scalar Adam, written out longhand.
        let (lr, b1, b2, eps) = (1e-3f64, 0.9f64, 0.999f64, 1e-8f64);
        let mut w = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut want = Vec::new();
        for t in 1..=10 {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            w -= lr * mh / (vh.sqrt() + eps);
            want.push(w);
        }
        let mut s = AdamState::new(AdamConfig::default(), &[1]);
        let mut p = vec![1.0];
        for &expect in &want {
            let g = [2.0 * p[0]];
            s.step(&mut [&mut p], &[&g]).unwrap();
            assert!((p[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_lr_is_noop_and_shapes_checked() {
        let cfg = AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(cfg, &[2]);
        let mut p = vec![0.3, 0.4];
        s.step(&mut [&mut p], &[&[5.0, -1.0]]).unwrap();
        assert_eq!(p, vec![0.3, 0.4]);
        assert!(s.step(&mut [&mut p], &[&[1.0]]).is_err());
    }
}
