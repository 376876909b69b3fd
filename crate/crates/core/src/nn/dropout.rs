use rand::Rng;

use super::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Per-element multipliers: 0 for dropped elements, `1/(1-p)` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    factors: Vec<f64>,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("dropout probability {p} outside [0, 1)")));
    }
    Ok(())
}

impl DropoutMask {
    pub fn sample(len: usize, p: f64, rng: &mut impl Rng) -> Result<Self> {
        check_p(p)?;
        let keep = 1.0 / (1.0 - p);
        let factors = (0..len)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        Ok(Self { factors })
    }

    pub fn ones(len: usize) -> Self {
        Self {
            factors: vec![1.0; len],
        }
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Forward and backward are the same elementwise product.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        if x.as_slice().len() != self.factors.len() {
            return Err(Error::Shape(format!(
                "dropout mask of {} for {} values",
                self.factors.len(),
                x.as_slice().len()
            )));
        }
        let data = x.as_slice().iter().zip(&self.factors).map(|(v, f)| v * f).collect();
        Tensor::new(x.channels(), x.len(), data)
    }
}

/// Inverted dropout. Eval mode is the identity and returns no mask.
pub fn dropout(x: &Tensor, p: f64, mode: DropoutMode, rng: &mut impl Rng) -> Result<(Tensor, Option<DropoutMask>)> {
    check_p(p)?;
    match mode {
        DropoutMode::Eval => Ok((x.clone(), None)),
        DropoutMode::Train => {
            let mask = DropoutMask::sample(x.as_slice().len(), p, rng)?;
            Ok((mask.apply(x)?, Some(mask)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_and_zero_p_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Tensor::new(2, 3, vec![1.0, -2.0, 3.0, 4.0, 5.0, -6.0]).unwrap();
        assert_eq!(dropout(&x, 0.7, DropoutMode::Eval, &mut rng).unwrap().0, x);
        assert_eq!(dropout(&x, 0.0, DropoutMode::Train, &mut rng).unwrap().0, x);
    }

    #[test]
    fn half_dropout_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let x = Tensor::new(1, n, (0..n).map(|i| 1.0 + i as f64).collect()).unwrap();
        let (y, _) = dropout(&x, 0.5, DropoutMode::Train, &mut rng).unwrap();
        let mut zeroed = 0;
        for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
            if *b == 0.0 {
                zeroed += 1;
            } else {
                assert_eq!(*b, 2.0 * a);
            }
        }
        let frac = zeroed as f64 / n as f64;
        assert!((0.49..=0.51).contains(&frac), "{frac}");
    }

    #[test]
    fn rejects_p_of_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Tensor::zeros(1, 4);
        assert!(matches!(dropout(&x, 1.0, DropoutMode::Train, &mut rng), Err(Error::InvalidArgument(_))));
        assert!(dropout(&x, -0.1, DropoutMode::Eval, &mut rng).is_err());
    }
}
