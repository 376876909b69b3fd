//! Flat run configuration shared by every subcommand.
//!
//! The file is TOML with one key per line and no tables:
//!
//! ```toml
//! version = 1
//! seed = 0
//! n_subjects = 6
//! enc_dec_epochs = 10
//! ```
//!
//! Missing keys take the defaults below; unknown keys are rejected by name.
//! `--set key=value` overrides are applied on top of the file, and
//! dedicated flags (`--seed`, `--no-template-init`) win over both.
//!
//! Evaluation defaults follow the published protocol: a detection matches
//! when it is within 40 ms of the true R-peak (10 samples at 250 Hz),
//! candidate peaks need a minimum distance of 12 samples and a maximum width
//! of 25 samples, and the fixed operating thresholds are 0.11 for Deep-MF
//! and 0.90 for the matched filter. Training runs 10 encoder-decoder and 15
//! classifier epochs with batch size 10 on 500-sample windows taken every
//! 100 samples.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::MfhtConfig;
use crate::dataset::SynthConfig;
use crate::deepmf::{TrainConfig, DEFAULT_SHIFTS};
use crate::eval::{EvalConfig, TemplateSource, DEEPMF_THRESHOLD, MATCH_TOLERANCE_MS, MF_THRESHOLD};
use crate::{seeds, Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Root seed; every stage derives its own seed from it.
    pub seed: u64,
    pub out_dir: String,

    pub n_subjects: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub mean_hr_bpm: f64,
    pub hr_variability: f64,
    pub rr_jitter: f64,
    pub morphology_jitter: f64,
    pub ear_attenuation: f64,
    pub pink_sigma: f64,
    pub drift_amplitude: f64,
    pub mains_amplitude: f64,
    pub impulse_rate_hz: f64,
    pub impulse_amplitude: f64,
    pub noise_spread: f64,

    pub enc_dec_epochs: usize,
    pub classifier_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub template_init: bool,
    /// Circular shifts of the template loaded into the six L1 kernels of channel 0.
    pub template_shifts: Vec<i64>,
    /// Hop between training windows, samples at 250 Hz.
    pub segment_hop: usize,

    pub mfht_corr_weight: f64,
    pub mfht_rr_weight: f64,
    pub mfht_accept_threshold: f64,
    pub mfht_smoothing: usize,
    pub mfht_rr_window: usize,
    pub mfht_template: TemplateSource,

    pub deepmf_threshold: f64,
    pub mf_threshold: f64,
    pub tolerance_ms: f64,
    /// Number of evenly spaced sweep thresholds in [0, 1].
    pub threshold_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SynthConfig::default();
        let t = TrainConfig::default();
        let m = MfhtConfig::default();
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            out_dir: "deepmf-out".into(),
            n_subjects: s.n_subjects,
            duration_s: s.duration_s,
            fs: s.fs,
            mean_hr_bpm: s.mean_hr_bpm,
            hr_variability: s.hr_variability,
            rr_jitter: s.rr_jitter,
            morphology_jitter: s.morphology_jitter,
            ear_attenuation: s.ear_attenuation,
            pink_sigma: s.pink_sigma,
            drift_amplitude: s.drift_amplitude,
            mains_amplitude: s.mains_amplitude,
            impulse_rate_hz: s.impulse_rate_hz,
            impulse_amplitude: s.impulse_amplitude,
            noise_spread: s.noise_spread,
            enc_dec_epochs: t.enc_dec_epochs,
            classifier_epochs: t.classifier_epochs,
            batch_size: t.batch_size,
            learning_rate: t.lr,
            dropout: t.dropout_p,
            template_init: t.template_init,
            template_shifts: DEFAULT_SHIFTS.to_vec(),
            segment_hop: t.segment_hop,
            mfht_corr_weight: m.corr_weight,
            mfht_rr_weight: m.rr_weight,
            mfht_accept_threshold: m.accept_threshold,
            mfht_smoothing: m.smoothing,
            mfht_rr_window: m.rr_window,
            mfht_template: TemplateSource::Recording,
            deepmf_threshold: DEEPMF_THRESHOLD,
            mf_threshold: MF_THRESHOLD,
            tolerance_ms: MATCH_TOLERANCE_MS,
            threshold_steps: 101,
        }
    }
}

impl RunConfig {
    /// Reads `path` (if given), applies `key=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.threshold_steps < 2 {
            return Err(Error::Config("threshold_steps must be at least 2".into()));
        }
        if !(self.tolerance_ms >= 0.0 && self.tolerance_ms.is_finite()) {
            return Err(Error::Config("tolerance_ms must be finite and >= 0".into()));
        }
        self.synth().validate()?;
        self.train().validate()?;
        self.mfht().validate()
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            n_subjects: self.n_subjects,
            duration_s: self.duration_s,
            fs: self.fs,
            mean_hr_bpm: self.mean_hr_bpm,
            hr_variability: self.hr_variability,
            rr_jitter: self.rr_jitter,
            morphology_jitter: self.morphology_jitter,
            ear_attenuation: self.ear_attenuation,
            pink_sigma: self.pink_sigma,
            drift_amplitude: self.drift_amplitude,
            mains_amplitude: self.mains_amplitude,
            impulse_rate_hz: self.impulse_rate_hz,
            impulse_amplitude: self.impulse_amplitude,
            noise_spread: self.noise_spread,
            seed: seeds::derive(self.seed, "stage/synth"),
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            enc_dec_epochs: self.enc_dec_epochs,
            classifier_epochs: self.classifier_epochs,
            batch_size: self.batch_size,
            lr: self.learning_rate,
            seed: seeds::derive(self.seed, "stage/train"),
            template_init: self.template_init,
            dropout_p: self.dropout,
            template_shifts: self.template_shifts.clone(),
            segment_hop: self.segment_hop,
        }
    }

    pub fn mfht(&self) -> MfhtConfig {
        MfhtConfig {
            corr_weight: self.mfht_corr_weight,
            rr_weight: self.mfht_rr_weight,
            accept_threshold: self.mfht_accept_threshold,
            smoothing: self.mfht_smoothing,
            rr_window: self.mfht_rr_window,
        }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        let n = self.threshold_steps - 1;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            train: self.train(),
            mfht: self.mfht(),
            mfht_template: self.mfht_template,
            thresholds: self.thresholds(),
            deepmf_threshold: self.deepmf_threshold,
            mf_threshold: self.mf_threshold,
            tolerance_ms: self.tolerance_ms,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serialises to TOML")
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
