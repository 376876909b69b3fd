use crate::dataset::synth_bumps;
use crate::dsp::{PeakSet, SignalTrace, MODEL_FS};
use crate::{Error, Result};

/// Template length: 0.8 s at 250 Hz.
pub const TEMPLATE_LEN: usize = 200;
/// R-peak position of templates cut around a beat.
pub const TEMPLATE_CENTER: usize = TEMPLATE_LEN / 2;
/// Fewest beats [`build_template`] will average.
pub const MIN_TEMPLATE_BEATS: usize = 5;

/// A single-beat ECG shape, peak-normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgTemplate {
    samples: Vec<f64>,
    r_peak_index: usize,
}

impl EcgTemplate {
    /// Normalises `samples` to unit peak magnitude; the R-peak is the
    /// largest-magnitude sample.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() != TEMPLATE_LEN {
            return Err(Error::Shape(format!(
                "template needs {TEMPLATE_LEN} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("template has non-finite samples".into()));
        }
        let (r_peak_index, peak) = samples
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        if peak == 0.0 {
            return Err(Error::InvalidArgument("template is all zeros".into()));
        }
        Ok(Self {
            samples: samples.iter().map(|v| v / peak).collect(),
            r_peak_index,
        })
    }

    /// Gaussian-bump PQRST beat with its R-peak at sample 100, using the
    /// nominal morphology of the synthetic generator.
    pub fn builtin() -> Self {
        let samples = (0..TEMPLATE_LEN)
            .map(|k| {
                let t = (k as f64 - TEMPLATE_CENTER as f64) / MODEL_FS;
                synth_bumps()
                    .iter()
                    .map(|&(a, off, w)| a * (-(t - off).powi(2) / (2.0 * w * w)).exp())
                    .sum()
            })
            .collect();
        Self::new(samples).expect("built-in template is valid")
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn r_peak_index(&self) -> usize {
        self.r_peak_index
    }

    /// Circular shift: `out[k] = samples[(k - shift) mod 200]`, so a positive
    /// shift moves the R-peak later.
    pub fn shifted(&self, shift: i64) -> Vec<f64> {
        let n = TEMPLATE_LEN as i64;
        (0..n)
            .map(|k| self.samples[(k - shift).rem_euclid(n) as usize])
            .collect()
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / TEMPLATE_LEN as f64).sqrt()
    }
}

/// Mean of the 200-sample windows that put each usable peak at index 100.
///
/// A peak is usable when it has 100 samples of margin on either side.
pub fn build_template(signal: &SignalTrace, peaks: &PeakSet) -> Result<EcgTemplate> {
    let x = signal.samples();
    let usable: Vec<usize> = peaks
        .indices()
        .iter()
        .copied()
        .filter(|&p| p >= TEMPLATE_CENTER && p + TEMPLATE_CENTER <= x.len())
        .collect();
    if usable.len() < MIN_TEMPLATE_BEATS {
        return Err(Error::InsufficientData(format!(
            "{} usable beats, need {MIN_TEMPLATE_BEATS}",
            usable.len()
        )));
    }
    let mut acc = vec![0.0; TEMPLATE_LEN];
    for &p in &usable {
        for (a, v) in acc.iter_mut().zip(&x[p - TEMPLATE_CENTER..p + TEMPLATE_CENTER]) {
            *a += v;
        }
    }
    let n = usable.len() as f64;
    EcgTemplate::new(acc.into_iter().map(|v| v / n).collect())
}
