//! Template-based comparison detectors: the plain matched filter (MF) and
//! the matched filter with Hilbert envelope and RR plausibility (MF-HT).

use serde::{Deserialize, Serialize};

use crate::deepmf::EcgTemplate;
use crate::dsp::{find_peaks, hilbert_envelope, PeakConstraints, PeakSet, SignalTrace};
use crate::eval::{MF_THRESHOLD, PEAK_MAX_WIDTH, PEAK_MIN_DISTANCE};
use crate::{Error, Result};

/// Half-width of the search, around each envelope peak, for the
/// correlation maximum it stands for.
const REFINE_RADIUS: usize = 5;

/// Sliding Pearson correlation between `signal` and `template`.
///
/// Output index `t` scores the window whose template R-peak lands on `t`.
/// Positions without a complete window, and windows with no variance,
/// score 0.
pub fn matched_filter(signal: &SignalTrace, template: &EcgTemplate) -> Result<SignalTrace> {
    let x = signal.samples();
    let t = template.samples();
    let m = t.len();
    if x.len() < m {
        return Err(Error::Length(format!(
            "signal of {} samples is shorter than the {m}-sample template",
            x.len()
        )));
    }
    let t_mean = t.iter().sum::<f64>() / m as f64;
    let tc: Vec<f64> = t.iter().map(|v| v - t_mean).collect();
    let t_norm = tc.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = template.r_peak_index();
    let mut out = vec![0.0; x.len()];
    for j in 0..=x.len() - m {
        let w = &x[j..j + m];
        let mean = w.iter().sum::<f64>() / m as f64;
        let (mut dot, mut ss) = (0.0, 0.0);
        for (v, c) in w.iter().zip(&tc) {
            let d = v - mean;
            dot += d * c;
            ss += d * d;
        }
        let denom = ss.sqrt() * t_norm;
        if denom > 0.0 {
            out[j + r] = (dot / denom).clamp(-1.0, 1.0);
        }
    }
    SignalTrace::new(out, signal.fs())
}

/// Evaluation findpeaks constraints at the given height threshold.
pub fn detection_constraints(min_height: f64) -> PeakConstraints {
    PeakConstraints::new(min_height, PEAK_MIN_DISTANCE, PEAK_MAX_WIDTH).expect("protocol constraints are valid")
}

/// Matched filter followed by constrained peak picking.
pub fn mf_detect(signal: &SignalTrace, template: &EcgTemplate, min_height: f64) -> Result<PeakSet> {
    Ok(find_peaks(&matched_filter(signal, template)?, &detection_constraints(min_height)))
}

/// [`mf_detect`] at the standard operating threshold.
pub fn mf_detect_default(signal: &SignalTrace, template: &EcgTemplate) -> Result<PeakSet> {
    mf_detect(signal, template, MF_THRESHOLD)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfhtConfig {
    pub corr_weight: f64,
    pub rr_weight: f64,
    pub accept_threshold: f64,
    /// Moving-average width applied to the envelope, samples.
    pub smoothing: usize,
    /// Accepted intervals averaged into the running RR estimate.
    pub rr_window: usize,
}

impl Default for MfhtConfig {
    fn default() -> Self {
        Self {
            corr_weight: 1.0,
            rr_weight: 0.5,
            accept_threshold: 0.25,
            smoothing: 5,
            rr_window: 8,
        }
    }
}

impl MfhtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.corr_weight >= 0.0 && self.rr_weight >= 0.0) {
            return Err(Error::Config("MF-HT weights must be >= 0".into()));
        }
        if self.smoothing == 0 || self.rr_window == 0 {
            return Err(Error::Config("MF-HT smoothing and rr_window must be >= 1".into()));
        }
        if !self.accept_threshold.is_finite() {
            return Err(Error::Config("MF-HT accept_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Centred moving average; windows are truncated at the edges.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let half_left = (width - 1) / 2;
    let half_right = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half_left);
            let hi = (i + half_right + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Deviation of `rr` from the nearest positive multiple of `mean_rr`,
/// relative to `mean_rr`. Using multiples keeps a missed beat from locking
/// the detector out of the following ones.
pub fn rr_deviation(rr: f64, mean_rr: f64) -> f64 {
    let k = (rr / mean_rr).round().max(1.0);
    (rr - k * mean_rr).abs() / mean_rr
}

/// Running RR estimate over the last `window` accepted intervals. An
/// interval spanning missed beats is divided by its nearest multiple of the
/// current estimate before it enters the average.
#[derive(Debug, Clone)]
pub struct RrTracker {
    intervals: Vec<f64>,
    window: usize,
}

impl RrTracker {
    pub fn new(window: usize) -> Self {
        Self {
            intervals: Vec::new(),
            window: window.max(1),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.intervals.is_empty() {
            return None;
        }
        let recent = &self.intervals[self.intervals.len().saturating_sub(self.window)..];
        Some(recent.iter().sum::<f64>() / recent.len() as f64)
    }

    pub fn push(&mut self, rr: f64) {
        let normalized = match self.mean() {
            Some(m) => rr / (rr / m).round().max(1.0),
            None => rr,
        };
        self.intervals.push(normalized);
    }
}

/// Acceptance score of a candidate `rr` samples after the last accepted
/// peak. Without an RR estimate the score is the correlation alone.
pub fn mfht_score(corr: f64, rr: f64, mean_rr: Option<f64>, cfg: &MfhtConfig) -> f64 {
    match mean_rr {
        None => cfg.corr_weight * corr,
        Some(m) => cfg.corr_weight * corr - cfg.rr_weight * rr_deviation(rr, m),
    }
}

/// MF-HT: matched filter, Hilbert envelope, smoothing, peak picking, then
/// sequential acceptance on correlation and RR plausibility.
pub fn mfht_detect(signal: &SignalTrace, template: &EcgTemplate, cfg: &MfhtConfig) -> Result<PeakSet> {
    cfg.validate()?;
    let mf = matched_filter(signal, template)?;
    let env = hilbert_envelope(&mf);
    let smooth = SignalTrace::new(moving_average(env.samples(), cfg.smoothing), signal.fs())?;
    let candidates = find_peaks(
        &smooth,
        &PeakConstraints::new(f64::NEG_INFINITY, PEAK_MIN_DISTANCE, f64::INFINITY)?,
    );
    let c = mf.samples();
    let mut accepted: Vec<usize> = Vec::new();
    let mut tracker = RrTracker::new(cfg.rr_window);
    for &p in candidates.indices() {
        let lo = p.saturating_sub(REFINE_RADIUS);
        let hi = (p + REFINE_RADIUS).min(c.len() - 1);
        let idx = (lo..=hi).fold(lo, |best, i| if c[i] > c[best] { i } else { best });
        let rr = match accepted.last() {
            Some(&last) if idx < last + PEAK_MIN_DISTANCE => continue,
            Some(&last) => Some((idx - last) as f64),
            None => None,
        };
        let score = mfht_score(c[idx], rr.unwrap_or(0.0), tracker.mean(), cfg);
        if score >= cfg.accept_threshold {
            if let Some(rr) = rr {
                tracker.push(rr);
            }
            accepted.push(idx);
        }
    }
    let heights = accepted.iter().map(|&i| c[i]).collect();
    PeakSet::new(accepted, heights)
}
