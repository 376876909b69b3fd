use crate::Result;

use super::Tensor;

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        // Same value, but no overflow for very negative x.
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative at `x`; ReLU uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }

    pub fn forward(self, x: &Tensor) -> Tensor {
        x.map(|v| self.apply(v))
    }

    /// Upstream gradient times the derivative at the pre-activation input.
    pub fn backward(self, input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        upstream.expect_shape(input.channels(), input.len(), "activation backward")?;
        let data = input
            .as_slice()
            .iter()
            .zip(upstream.as_slice())
            .map(|(&x, &g)| g * self.derivative(x))
            .collect();
        Tensor::new(input.channels(), input.len(), data)
    }
}
