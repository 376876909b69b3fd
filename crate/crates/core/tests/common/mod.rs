//! Reference implementations shared by the integration tests. Each one is
//! the plainest possible loop over the defining formula.
#![allow(dead_code)]

use std::f64::consts::PI;

use deepmf::nn::{same_padding, Conv1d, ConvTranspose1d, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Analytic magnitude of an order-n Butterworth band-pass after the
/// bilinear transform with pre-warping.
pub fn analytic_band_pass(f: f64, lo: f64, hi: f64, order: usize, fs: f64) -> f64 {
    let w = |f: f64| (PI * f / fs).tan();
    let (w1, w2, wf) = (w(lo), w(hi), w(f));
    let omega = (wf * wf - w1 * w2) / (wf * (w2 - w1));
    1.0 / (1.0 + omega.abs().powi(2 * order as i32)).sqrt()
}

pub fn conv_oracle(x: &Tensor, l: &Conv1d) -> Tensor {
    let (n_out, left, _) = same_padding(x.len(), l.kernel_len, l.stride);
    let mut out = Tensor::zeros(l.out_channels, n_out);
    for o in 0..l.out_channels {
        for t in 0..n_out {
            let mut acc = l.bias[o];
            for i in 0..l.in_channels {
                for k in 0..l.kernel_len {
                    let pos = (t * l.stride + k) as isize - left as isize;
                    if pos >= 0 && (pos as usize) < x.len() {
                        acc += l.weight[(o * l.in_channels + i) * l.kernel_len + k] * x.channel(i)[pos as usize];
                    } else {
                        acc += l.weight[(o * l.in_channels + i) * l.kernel_len + k] * 0.0;
                    }
                }
            }
            out.channel_mut(o)[t] = acc;
        }
    }
    out
}

pub fn tconv_oracle(x: &Tensor, l: &ConvTranspose1d, target: usize) -> Tensor {
    let (_, left, _) = same_padding(target, l.kernel_len, l.stride);
    let mut out = Tensor::zeros(l.out_channels, target);
    for o in 0..l.out_channels {
        out.channel_mut(o).iter_mut().for_each(|v| *v = l.bias[o]);
    }
    for o in 0..l.out_channels {
        for i in 0..l.in_channels {
            for t in 0..x.len() {
                for k in 0..l.kernel_len {
                    let pos = (t * l.stride + k) as isize - left as isize;
                    if pos >= 0 && (pos as usize) < target {
                        let w = l.weight[(i * l.out_channels + o) * l.kernel_len + k];
                        out.channel_mut(o)[pos as usize] += w * x.channel(i)[t];
                    }
                }
            }
        }
    }
    out
}

/// Pearson correlation of every full window with the template, placed at
/// the window start plus `r_peak`; incomplete windows score 0.
pub fn pearson_lag_oracle(x: &[f64], template: &[f64], r_peak: usize) -> Vec<f64> {
    let m = template.len();
    let mut out = vec![0.0; x.len()];
    for j in 0..=x.len() - m {
        let w = &x[j..j + m];
        let mw = w.iter().sum::<f64>() / m as f64;
        let mt = template.iter().sum::<f64>() / m as f64;
        let mut num = 0.0;
        let mut dw = 0.0;
        let mut dt = 0.0;
        for k in 0..m {
            num += (w[k] - mw) * (template[k] - mt);
            dw += (w[k] - mw) * (w[k] - mw);
            dt += (template[k] - mt) * (template[k] - mt);
        }
        out[j + r_peak] = if dw > 0.0 && dt > 0.0 { num / (dw * dt).sqrt() } else { 0.0 };
    }
    out
}

/// Scalar Adam on `f(w) = w^2`, written out longhand.
pub fn adam_scalar_trajectory(w0: f64, lr: f64, steps: usize) -> Vec<f64> {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
    let mut w = w0;
    let (mut m, mut v) = (0.0, 0.0);
    let mut out = Vec::new();
    for t in 1..=steps as i32 {
        let g = 2.0 * w;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t));
        let vh = v / (1.0 - b2.powi(t));
        w -= lr * mh / (vh.sqrt() + eps);
        out.push(w);
    }
    out
}

/// Size of a maximum matching between predictions and truths where an
/// edge joins a pair within `tol` samples (augmenting paths).
pub fn max_bipartite_matching(pred: &[usize], truth: &[usize], tol: usize) -> usize {
    fn augment(t: usize, pred: &[usize], truth: &[usize], tol: usize, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for p in 0..pred.len() {
            if pred[p].abs_diff(truth[t]) <= tol && !seen[p] {
                seen[p] = true;
                if owner[p].is_none() || augment(owner[p].unwrap(), pred, truth, tol, seen, owner) {
                    owner[p] = Some(t);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; pred.len()];
    let mut size = 0;
    for t in 0..truth.len() {
        let mut seen = vec![false; pred.len()];
        if augment(t, pred, truth, tol, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.random_range(0..3) {
        // Coarse quantisation produces plateaus and equal heights.
        0 => (0..n).map(|_| (rng.random::<f64>() * 6.0).round() / 6.0).collect(),
        1 => {
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    acc += rng.random::<f64>() - 0.5;
                    acc
                })
                .collect()
        }
        _ => (0..n)
            .map(|i| (i as f64 * 0.07).sin() + 0.3 * (rng.random::<f64>() - 0.5))
            .collect(),
    }
}

/// Exhaustive reference: every local maximum with its prominence and width
/// computed from slices, then greedy distance filtering by priority.
pub fn oracle_peaks(x: &[f64], min_height: f64, min_distance: usize, max_width: f64) -> Vec<usize> {
    let n = x.len();
    let mut maxima = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if x[i - 1] >= x[i] {
            continue;
        }
        // A plateau running into the last sample is not a peak.
        if let Some(j) = (i + 1..n).find(|&j| x[j] != x[i]) {
            if x[j] < x[i] {
                maxima.push(i);
            }
        }
    }

    let mut cands = Vec::new();
    for &p in &maxima {
        let h = x[p];
        let left_stop = (0..p).rev().find(|&k| x[k] > h).map_or(0, |k| k + 1);
        let right_stop = (p + 1..n).find(|&k| x[k] > h).unwrap_or(n);
        let left_min = x[left_stop..=p].iter().cloned().fold(f64::INFINITY, f64::min);
        let right_min = x[p..right_stop].iter().cloned().fold(f64::INFINITY, f64::min);
        let prom = h - left_min.max(right_min);
        let left_base = (left_stop..=p).rev().find(|&k| x[k] == left_min).unwrap();
        let right_base = (p..right_stop).find(|&k| x[k] == right_min).unwrap();
        let level = h - prom / 2.0;
        let li = (left_base..=p).rev().find(|&k| x[k] <= level).unwrap_or(left_base);
        let left = if x[li] < level {
            li as f64 + (level - x[li]) / (x[li + 1] - x[li])
        } else {
            li as f64
        };
        let ri = (p..=right_base).find(|&k| x[k] <= level).unwrap_or(right_base);
        let right = if x[ri] < level {
            ri as f64 - (level - x[ri]) / (x[ri - 1] - x[ri])
        } else {
            ri as f64
        };
        cands.push((p, h, right - left));
    }
    cands.retain(|&(_, h, w)| h >= min_height && w <= max_width);
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = Vec::new();
    for (p, _, _) in cands {
        if kept.iter().all(|&k| k.abs_diff(p) >= min_distance) {
            kept.push(p);
        }
    }
    kept.sort();
    kept
}

/// Finite-difference check of the full encoder-decoder (with fixed dropout
/// masks) and of the classifier on one random window. Returns the worst
/// relative errors.
pub fn model_grad_check(seed: u64) -> (deepmf::nn::GradCheckReport, deepmf::nn::GradCheckReport) {
    use deepmf::deepmf::*;
    use rand::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = DeepMfParams::init(
        &EcgTemplate::builtin(),
        &InitSpec {
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    // Unit variance, like the standardised channels the model sees.
    let x = Tensor::new(3, 500, (0..1500).map(|_| (rng.random::<f64>() - 0.5) * 12f64.sqrt()).collect()).unwrap();
    let reference: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let target: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let masks = EncoderMasks::sample(0.5, &mut rng).unwrap();

    let mut grads = DeepMfParams::zeros();
    enc_dec_loss_and_grad(&params, &x, &reference, Mode::Train(&masks), &mut grads).unwrap();
    let flat = params.flatten(ParamGroup::EncoderDecoder);
    let enc_dec = deepmf::nn::grad_check(&flat, &grads.flatten(ParamGroup::EncoderDecoder), 3e-5, seed, |w| {
        let mut p = params.clone();
        p.assign(ParamGroup::EncoderDecoder, w)?;
        enc_dec_loss(&p, &x, &reference, Mode::Train(&masks))
    })
    .unwrap();

    let z = params.encode(&x, Mode::Eval).unwrap();
    let mut grads = DeepMfParams::zeros();
    classifier_loss_and_grad(&params, &z, &target, &mut grads).unwrap();
    let flat = params.flatten(ParamGroup::Classifier);
    let classifier = deepmf::nn::grad_check(&flat, &grads.flatten(ParamGroup::Classifier), 3e-5, seed, |w| {
        let mut p = params.clone();
        p.assign(ParamGroup::Classifier, w)?;
        let y = p.classify(&z)?;
        Ok(deepmf::nn::mse_loss(&y, &target)?.0)
    })
    .unwrap();
    (enc_dec, classifier)
}
