//! Minimal reverse-mode engine for 1-D convolutional networks.
//!
//! Every layer exposes an explicit `forward` and a `backward` that returns the
//! exact gradients of that forward definition. All arithmetic is f64.

mod activation;
mod adam;
mod container;
mod conv;
mod dropout;
mod gradcheck;
mod linear;
mod loss;
mod tensor;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState};
pub use container::{read_container, write_container, ContainerHeader, TensorEntry, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use conv::{Conv1d, ConvGrads, ConvTranspose1d, same_padding};
pub use dropout::{dropout, DropoutMask, DropoutMode};
pub use gradcheck::{grad_check, GradCheckReport};
pub use linear::{Linear, LinearGrads};
pub use loss::mse_loss;
pub use tensor::Tensor;

use rand::Rng;

/// Uniform draws in `[-bound, bound)`.
pub(crate) fn uniform_fill(rng: &mut impl Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}
