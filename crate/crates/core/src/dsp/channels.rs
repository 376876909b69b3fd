use super::{design_butterworth, filtfilt, FilterSpec, SignalTrace};
use crate::{Error, Result};

/// Rate the network and every detector operate at.
pub const MODEL_FS: f64 = 250.0;

/// Variance below which standardisation yields zeros instead of dividing.
const MIN_VARIANCE: f64 = 1e-12;

/// Order of the anti-alias low-pass used by [`decimate`].
const ANTI_ALIAS_ORDER: usize = 8;

/// Zero-phase anti-aliased downsampling by an integer factor.
///
/// The low-pass cutoff sits at 0.8 of the new Nyquist frequency and the
/// output keeps samples `0, factor, 2*factor, ...`.
pub fn decimate(trace: &SignalTrace, factor: usize) -> Result<SignalTrace> {
    if factor == 0 {
        return Err(Error::InvalidArgument("decimation factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(trace.clone());
    }
    let new_fs = trace.fs() / factor as f64;
    let lp = design_butterworth(&FilterSpec::low_pass(0.8 * new_fs / 2.0, ANTI_ALIAS_ORDER), trace.fs())?;
    let filtered = filtfilt(trace, &lp)?;
    let samples: Vec<f64> = filtered.samples().iter().step_by(factor).copied().collect();
    SignalTrace::new(samples, new_fs)
}

/// Zero mean, unit variance over the whole trace; a flat trace maps to zeros.
pub fn standardize(trace: &SignalTrace) -> SignalTrace {
    let x = trace.samples();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var < MIN_VARIANCE {
        return trace.with_samples(vec![0.0; x.len()]);
    }
    let sd = var.sqrt();
    trace.with_samples(x.iter().map(|v| (v - mean) / sd).collect())
}

/// The three input filters of the network.
///
/// Channel 0 is the wide ECG band, channel 1 keeps only P/T-wave content and
/// channel 2 is a plain high-pass that leaves QRS detail and mains
/// interference in place.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBank {
    pub specs: [FilterSpec; 3],
}

impl Default for ChannelBank {
    fn default() -> Self {
        Self {
            specs: [
                FilterSpec::band_pass(1.0, 45.0, 4),
                FilterSpec::band_pass(1.0, 5.0, 4),
                FilterSpec::high_pass(1.0, 4),
            ],
        }
    }
}

impl ChannelBank {
    /// Filters `trace` through every channel without standardising.
    pub fn filter(&self, trace: &SignalTrace) -> Result<[SignalTrace; 3]> {
        let run = |spec: &FilterSpec| -> Result<SignalTrace> {
            let c = design_butterworth(spec, trace.fs())?;
            filtfilt(trace, &c)
        };
        Ok([run(&self.specs[0])?, run(&self.specs[1])?, run(&self.specs[2])?])
    }

    /// Filters and standardises each channel over the whole recording.
    pub fn apply(&self, trace: &SignalTrace) -> Result<[SignalTrace; 3]> {
        let [a, b, c] = self.filter(trace)?;
        Ok([standardize(&a), standardize(&b), standardize(&c)])
    }
}

/// The default channel bank applied to a 250 Hz trace.
pub fn preprocess_channels(trace: &SignalTrace) -> Result<[SignalTrace; 3]> {
    if (trace.fs() - MODEL_FS).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "preprocessing expects {MODEL_FS} Hz input, got {} Hz",
            trace.fs()
        )));
    }
    ChannelBank::default().apply(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::design_butterworth;
    use std::f64::consts::PI;

    fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn factor_one_is_identity() {
        let t = SignalTrace::new(sine(3.0, 500.0, 300), 500.0).unwrap();
        assert_eq!(decimate(&t, 1).unwrap(), t);
        assert!(matches!(decimate(&t, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn halves_rate_and_length() {
        let t = SignalTrace::new(sine(3.0, 500.0, 1000), 500.0).unwrap();
        let d = decimate(&t, 2).unwrap();
        assert_eq!(d.len(), 500);
        assert_eq!(d.fs(), 250.0);
        let odd = SignalTrace::new(sine(3.0, 500.0, 1001), 500.0).unwrap();
        assert_eq!(decimate(&odd, 2).unwrap().len(), 501);
    }

    #[test]
    fn passband_amplitude_is_preserved() {
        let t = SignalTrace::new(sine(10.0, 500.0, 5000), 500.0).unwrap();
        let d = decimate(&t, 2).unwrap();
        let core = &d.samples()[250..2250];
        let amp = core.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((amp - 1.0).abs() < 0.01, "amplitude {amp}");
    }

    #[test]
    fn constant_input_maps_to_zero_channels() {
        let t = SignalTrace::new(vec![3.7; 2000], MODEL_FS).unwrap();
        let raw = ChannelBank::default().filter(&t).unwrap();
        for ch in &raw {
            assert!(ch.samples().iter().all(|v| v.abs() < 1e-6));
        }
        for ch in preprocess_channels(&t).unwrap() {
            assert!(ch.samples().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn channel_selectivity_matches_design() {
        let n = 5000;
        let three = SignalTrace::new(sine(3.0, MODEL_FS, n), MODEL_FS).unwrap();
        let twenty = SignalTrace::new(sine(20.0, MODEL_FS, n), MODEL_FS).unwrap();
        let fifty = SignalTrace::new(sine(50.0, MODEL_FS, n), MODEL_FS).unwrap();
        let bank = ChannelBank::default();
        let mid = 1000..4000;

        let c3 = bank.filter(&three).unwrap();
        for ch in &c3 {
            assert!(rms(&ch.samples()[mid.clone()]) > 0.5);
        }
        let c20 = bank.filter(&twenty).unwrap();
        let ratio_db = 20.0
            * (rms(&c20[1].samples()[mid.clone()]) / rms(&c20[0].samples()[mid.clone()])).log10();
        // Analytic single-pass response of the 1-5 Hz band at 20 Hz, squared for two passes.
        let bp5 = design_butterworth(&bank.specs[1], MODEL_FS).unwrap();
        let analytic_db = 40.0 * bp5.magnitude(20.0, MODEL_FS).log10();
        assert!(analytic_db < -20.0);
        assert!(ratio_db <= -20.0, "channel 1 only {ratio_db} dB below channel 0");

        let c50 = bank.filter(&fifty).unwrap();
        let loss_db = 20.0 * (rms(&c50[2].samples()[mid.clone()]) * 2f64.sqrt()).log10();
        assert!(loss_db > -1.0, "high-pass lost {loss_db} dB at 50 Hz");
    }

    #[test]
    fn preprocess_requires_model_rate() {
        let t = SignalTrace::new(vec![0.0; 2000], 500.0).unwrap();
        assert!(preprocess_channels(&t).is_err());
    }
}
