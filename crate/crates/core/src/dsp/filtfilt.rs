use super::{FilterCoefficients, SignalTrace};
use crate::{Error, Result};

/// Single-pass cascade filter in direct form II transposed.
///
/// `initial` holds one `[z0, z1]` state per section; `None` starts at rest.
pub fn sosfilt(coeffs: &FilterCoefficients, x: &[f64], initial: Option<&[[f64; 2]]>) -> Vec<f64> {
    let mut y = x.to_vec();
    for (s, section) in coeffs.sections().iter().enumerate() {
        let [b0, b1, b2] = section.b;
        let [_, a1, a2] = section.a;
        let [mut z0, mut z1] = initial.map_or([0.0, 0.0], |st| st[s]);
        for v in y.iter_mut() {
            let xin = *v;
            let out = b0 * xin + z0;
            z0 = b1 * xin - a1 * out + z1;
            z1 = b2 * xin - a2 * out;
            *v = out;
        }
    }
    y
}

/// Per-section steady-state for a unit step through the whole cascade.
fn cascade_step_state(coeffs: &FilterCoefficients) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    coeffs
        .sections()
        .iter()
        .map(|s| {
            let [z0, z1] = s.step_state();
            let st = [z0 * scale, z1 * scale];
            scale *= s.dc_gain();
            st
        })
        .collect()
}

fn run_with_state(coeffs: &FilterCoefficients, zi: &[[f64; 2]], x: &[f64]) -> Vec<f64> {
    let x0 = x[0];
    let scaled: Vec<[f64; 2]> = zi.iter().map(|[a, b]| [a * x0, b * x0]).collect();
    sosfilt(coeffs, x, Some(&scaled))
}

/// Zero-phase forward-backward filtering.
///
/// The trace is extended at both ends by odd reflection of `3 * order`
/// samples, each pass starts from the steady state matching its first sample,
/// and the extension is trimmed afterwards. The effective magnitude response
/// is the single-pass magnitude squared, with no phase shift.
pub fn filtfilt(trace: &SignalTrace, coeffs: &FilterCoefficients) -> Result<SignalTrace> {
    let x = trace.samples();
    let n = x.len();
    let pad = 3 * coeffs.order();
    if n <= pad {
        return Err(Error::Length(format!(
            "filtfilt needs more than {pad} samples, got {n}"
        )));
    }

    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (x[0], x[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    let zi = cascade_step_state(coeffs);
    let mut y = run_with_state(coeffs, &zi, &ext);
    y.reverse();
    let mut y = run_with_state(coeffs, &zi, &y);
    y.reverse();
    Ok(trace.with_samples(y[pad..pad + n].to_vec()))
}
