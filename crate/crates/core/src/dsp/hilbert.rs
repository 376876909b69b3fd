use rustfft::{num_complex::Complex64, FftPlanner};

use super::SignalTrace;

/// Magnitude of the FFT analytic signal.
///
/// Negative-frequency bins are zeroed and positive ones doubled; DC and (for
/// even lengths) the Nyquist bin are kept as-is.
pub fn hilbert_envelope(trace: &SignalTrace) -> SignalTrace {
    let n = trace.len();
    let mut buf: Vec<Complex64> = trace
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    trace.with_samples(buf.iter().map(|c| c.norm() * scale).collect())
}
