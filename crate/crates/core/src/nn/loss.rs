use crate::{Error, Result};

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "mse over {} predictions and {} targets",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let t = [0.5, -1.0, 2.0];
        let (l, g) = mse_loss(&t, &t).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
        let p: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        assert_eq!(mse_loss(&p, &t).unwrap().0, 1.0);
        assert!(mse_loss(&p, &t[..2]).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = [0.3, -0.7, 1.9, 0.05];
        let t = [0.1, 0.2, 1.0, -0.4];
        let (_, g) = mse_loss(&p, &t).unwrap();
        let h = 1e-5;
        for i in 0..p.len() {
            let (mut a, mut b) = (p, p);
            a[i] += h;
            b[i] -= h;
            let num = (mse_loss(&a, &t).unwrap().0 - mse_loss(&b, &t).unwrap().0) / (2.0 * h);
            assert!((g[i] - num).abs() < 1e-6);
        }
    }
}
