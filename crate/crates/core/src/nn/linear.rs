use rand::Rng;

use super::uniform_fill;
use crate::{Error, Result};

/// Dense layer `y = W x + b`, weights laid out `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub input: Vec<f64>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || weight.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::Shape(format!(
                "linear {in_dim}->{out_dim} got {} weights, {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weight,
            bias,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Weights and biases uniform in `±1/sqrt(in_dim)`.
    pub fn init_uniform(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Self {
            in_dim,
            out_dim,
            weight: uniform_fill(rng, in_dim * out_dim, bound),
            bias: uniform_fill(rng, out_dim, bound),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.in_dim, self.out_dim)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::Shape(format!("linear expects {} inputs, got {}", self.in_dim, x.len())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, &b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect())
    }

    pub fn accumulate_backward(
        &self,
        x: &[f64],
        upstream: &[f64],
        grad: &mut Linear,
        want_input: bool,
    ) -> Result<Option<Vec<f64>>> {
        self.check_input(x)?;
        if upstream.len() != self.out_dim {
            return Err(Error::Shape(format!(
                "linear upstream has {} values, expected {}",
                upstream.len(),
                self.out_dim
            )));
        }
        if grad.weight.len() != self.weight.len() || grad.bias.len() != self.bias.len() {
            return Err(Error::Shape("gradient buffer does not match layer".into()));
        }
        for (o, &g) in upstream.iter().enumerate() {
            grad.bias[o] += g;
            let row = &mut grad.weight[o * self.in_dim..(o + 1) * self.in_dim];
            for (w, &v) in row.iter_mut().zip(x) {
                *w += g * v;
            }
        }
        if !want_input {
            return Ok(None);
        }
        let mut gx = vec![0.0; self.in_dim];
        for (row, &g) in self.weight.chunks_exact(self.in_dim).zip(upstream) {
            for (d, &w) in gx.iter_mut().zip(row) {
                *d += g * w;
            }
        }
        Ok(Some(gx))
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<LinearGrads> {
        let mut grad = self.zeros_like();
        let input = self.accumulate_backward(x, upstream, &mut grad, true)?.unwrap_or_default();
        Ok(LinearGrads {
            input,
            weight: grad.weight,
            bias: grad.bias,
        })
    }
}
