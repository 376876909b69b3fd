//! Deterministic signal-processing primitives.

mod butterworth;
mod channels;
mod filtfilt;
mod hilbert;
mod peaks;

pub use butterworth::{design_butterworth, Biquad, FilterBand, FilterCoefficients, FilterSpec};
pub use channels::{decimate, preprocess_channels, standardize, ChannelBank, MODEL_FS};
pub use filtfilt::{filtfilt, sosfilt};
pub use hilbert::hilbert_envelope;
pub use peaks::{find_peaks, find_peaks_in, PeakCandidates, PeakConstraints, PeakSet};

use crate::{Error, Result};

/// A uniformly sampled real-valued waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    samples: Vec<f64>,
    fs: f64,
}

impl SignalTrace {
    /// Builds a trace, rejecting empty input, non-positive rates and non-finite samples.
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Length("trace has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Same rate, new samples. Used by transforms whose output is finite by construction.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(!samples.is_empty());
        Self {
            samples,
            fs: self.fs,
        }
    }
}
