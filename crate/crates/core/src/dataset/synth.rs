//! Synthetic ear-ECG.
//!
//! The reference is a train of Gaussian-bump PQRST beats. The ear channel is
//! an attenuated copy plus pink noise, slow drift, mains hum and sparse
//! decaying impulses. Every subject draws from its own seeded stream, so a
//! subject's recording does not depend on how many others are generated.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Recording;
use crate::dsp::SignalTrace;
use crate::{seeds, Error, Result};

/// `(amplitude, offset_s, width_s)` of the P, Q, R, S and T bumps.
pub(crate) const BUMPS: [(f64, f64, f64); 5] = [
    (0.12, -0.20, 0.025),
    (-0.12, -0.035, 0.010),
    (1.0, 0.0, 0.010),
    (-0.2, 0.035, 0.010),
    (0.3, 0.28, 0.050),
];

/// Shortest RR interval the generator will emit, in seconds.
const MIN_RR_S: f64 = 0.3;

const IMPULSE_DECAY_S: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub mean_hr_bpm: f64,
    /// Standard deviation of the per-subject heart rate around the mean, bpm.
    pub hr_variability: f64,
    /// Beat-to-beat RR standard deviation as a fraction of the subject's RR.
    pub rr_jitter: f64,
    /// Uniform per-subject jitter (fraction) on bump amplitudes and widths.
    pub morphology_jitter: f64,
    /// Ear ECG amplitude relative to the reference.
    pub ear_attenuation: f64,
    pub pink_sigma: f64,
    /// Peak amplitude of the 0.1-0.5 Hz drift.
    pub drift_amplitude: f64,
    pub mains_amplitude: f64,
    pub impulse_rate_hz: f64,
    pub impulse_amplitude: f64,
    /// Log-normal spread of the per-subject noise scale.
    pub noise_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 36,
            duration_s: 300.0,
            fs: 500.0,
            mean_hr_bpm: 70.0,
            hr_variability: 8.0,
            rr_jitter: 0.04,
            morphology_jitter: 0.1,
            ear_attenuation: 0.1,
            pink_sigma: 0.05,
            drift_amplitude: 0.2,
            mains_amplitude: 0.02,
            impulse_rate_hz: 0.3,
            impulse_amplitude: 0.3,
            noise_spread: 0.4,
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// A noiseless variant: the ear channel equals the reference.
    pub fn clean() -> Self {
        Self {
            ear_attenuation: 1.0,
            pink_sigma: 0.0,
            drift_amplitude: 0.0,
            mains_amplitude: 0.0,
            impulse_rate_hz: 0.0,
            impulse_amplitude: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(40.0..=180.0).contains(&self.mean_hr_bpm) {
            return bad(format!("mean_hr_bpm {} outside [40, 180]", self.mean_hr_bpm));
        }
        if !(self.fs > 0.0 && self.duration_s > 0.0) {
            return bad("fs and duration_s must be positive".into());
        }
        let non_negative = [
            ("hr_variability", self.hr_variability),
            ("rr_jitter", self.rr_jitter),
            ("ear_attenuation", self.ear_attenuation),
            ("pink_sigma", self.pink_sigma),
            ("drift_amplitude", self.drift_amplitude),
            ("mains_amplitude", self.mains_amplitude),
            ("impulse_rate_hz", self.impulse_rate_hz),
            ("impulse_amplitude", self.impulse_amplitude),
            ("noise_spread", self.noise_spread),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.morphology_jitter) {
            return bad(format!("morphology_jitter {} outside [0, 1)", self.morphology_jitter));
        }
        if self.mains_amplitude > 0.0 && self.fs <= 100.0 {
            return bad("fs must exceed 100 Hz to carry 50 Hz interference".into());
        }
        Ok(())
    }
}

pub fn subject_id(index: usize) -> String {
    format!("s{:02}", index + 1)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Paul Kellet's pink filter on white noise, normalised to unit variance.
fn pink_noise(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let w = gaussian(rng);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let p = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            p
        })
        .collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if sd > 0.0 {
        out.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    out
}

/// Recording for subject `index` (id `s{index+1:02}`).
pub fn synthesize_subject(cfg: &SynthConfig, index: usize) -> Result<Recording> {
    cfg.validate()?;
    let id = subject_id(index);
    let mut rng = seeds::rng(cfg.seed, &format!("synth/{id}"));
    let fs = cfg.fs;
    let n = (cfg.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::Config("duration_s yields no samples".into()));
    }

    let j = cfg.morphology_jitter;
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng| if j > 0.0 { rng.random_range(1.0 - j..1.0 + j) } else { 1.0 };
    let bumps: Vec<(f64, f64, f64)> = BUMPS
        .iter()
        .map(|&(a, off, w)| (a * jitter(&mut rng), off, w * jitter(&mut rng)))
        .collect();

    let hr = (cfg.mean_hr_bpm + cfg.hr_variability * gaussian(&mut rng)).clamp(40.0, 180.0);
    let rr = 60.0 / hr;
    let mut beats = Vec::new();
    let mut t = rng.random::<f64>() * rr;
    while t < cfg.duration_s {
        beats.push(t);
        let step = rr * (1.0 + cfg.rr_jitter * gaussian(&mut rng));
        t += step.max(MIN_RR_S);
    }

    let mut reference = vec![0.0; n];
    let (lo, hi) = (-0.4, 0.6);
    for &b in &beats {
        let start = (((b + lo) * fs).ceil().max(0.0)) as usize;
        let end = (((b + hi) * fs).floor() as usize).min(n - 1);
        for (i, r) in reference.iter_mut().enumerate().take(end + 1).skip(start) {
            let ts = i as f64 / fs - b;
            *r += bumps
                .iter()
                .map(|&(a, off, w)| a * (-(ts - off).powi(2) / (2.0 * w * w)).exp())
                .sum::<f64>();
        }
    }

    let mut ear: Vec<f64> = reference.iter().map(|r| cfg.ear_attenuation * r).collect();
    let scale = if cfg.noise_spread > 0.0 {
        (cfg.noise_spread * gaussian(&mut rng)).exp()
    } else {
        1.0
    };
    if cfg.pink_sigma > 0.0 {
        for (e, p) in ear.iter_mut().zip(pink_noise(n, &mut rng)) {
            *e += scale * cfg.pink_sigma * p;
        }
    }
    if cfg.drift_amplitude > 0.0 {
        for _ in 0..3 {
            let f = rng.random_range(0.1..0.5);
            let ph = rng.random_range(0.0..2.0 * PI);
            let a = scale * cfg.drift_amplitude / 3.0;
            for (i, e) in ear.iter_mut().enumerate() {
                *e += a * (2.0 * PI * f * i as f64 / fs + ph).sin();
            }
        }
    }
    if cfg.mains_amplitude > 0.0 {
        let ph = rng.random_range(0.0..2.0 * PI);
        let a = scale * cfg.mains_amplitude;
        for (i, e) in ear.iter_mut().enumerate() {
            *e += a * (2.0 * PI * 50.0 * i as f64 / fs + ph).sin();
        }
    }
    if cfg.impulse_rate_hz > 0.0 && cfg.impulse_amplitude > 0.0 {
        let gap = Exp::new(cfg.impulse_rate_hz).map_err(|e| Error::Config(e.to_string()))?;
        let mut t = gap.sample(&mut rng);
        let len = (5.0 * IMPULSE_DECAY_S * fs).ceil() as usize;
        while t < cfg.duration_s {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let a = sign * scale * cfg.impulse_amplitude * rng.random_range(0.5..1.5);
            let start = (t * fs) as usize;
            for (k, e) in ear.iter_mut().skip(start).take(len).enumerate() {
                *e += a * (-(k as f64) / (IMPULSE_DECAY_S * fs)).exp();
            }
            t += gap.sample(&mut rng);
        }
    }

    Recording::new(id, SignalTrace::new(ear, fs)?, SignalTrace::new(reference, fs)?)
}

pub fn synthesize(cfg: &SynthConfig) -> Result<Vec<Recording>> {
    cfg.validate()?;
    (0..cfg.n_subjects).map(|i| synthesize_subject(cfg, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{find_peaks, PeakConstraints};

    fn short(cfg: SynthConfig) -> SynthConfig {
        SynthConfig {
            n_subjects: 2,
            duration_s: 20.0,
            ..cfg
        }
    }

    #[test]
    fn clean_ear_equals_reference() {
        for r in synthesize(&short(SynthConfig::clean())).unwrap() {
            assert_eq!(r.ear, r.reference);
        }
    }

    #[test]
    fn beat_count_matches_rate() {
        let cfg = SynthConfig {
            n_subjects: 1,
            duration_s: 300.0,
            mean_hr_bpm: 60.0,
            hr_variability: 0.0,
            rr_jitter: 0.0,
            ..SynthConfig::clean()
        };
        let r = &synthesize(&cfg).unwrap()[0];
        let max = r.reference.samples().iter().cloned().fold(f64::MIN, f64::max);
        let c = PeakConstraints::new(0.5 * max, 12, f64::INFINITY).unwrap();
        let beats = find_peaks(&r.reference, &c).len() as i64;
        assert!((beats - 300).abs() <= 1, "{beats}");
    }

    #[test]
    fn deterministic_per_seed_and_subject() {
        let cfg = short(SynthConfig::default());
        let a = synthesize(&cfg).unwrap();
        assert_eq!(a, synthesize(&cfg).unwrap());
        assert_eq!(a[1], synthesize_subject(&cfg, 1).unwrap());
        let other = synthesize(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a[0].ear, other[0].ear);
        assert_eq!(a[0].subject_id, "s01");
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            SynthConfig { mean_hr_bpm: 200.0, ..SynthConfig::default() },
            SynthConfig { pink_sigma: -1.0, ..SynthConfig::default() },
            SynthConfig { morphology_jitter: 1.0, ..SynthConfig::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }
}
