use serde::{Deserialize, Serialize};

use super::matching::{match_peaks, SubjectMetrics};
use super::sweep::{pooled_curve, pr_sweep, PrCurve};
use super::{DEEPMF_THRESHOLD, MATCH_TOLERANCE_MS, MF_THRESHOLD};
use crate::baselines::{detection_constraints, matched_filter, mfht_detect, MfhtConfig};
use crate::dataset::{loso_split, subject_ids, PreparedRecording};
use crate::deepmf::{build_template, fit, infer_prepared, EcgTemplate, TrainConfig, TrainedModel};
use crate::dsp::{find_peaks, PeakSet, SignalTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    DeepMf,
    Mf,
    MfHt,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::DeepMf, Detector::Mf, Detector::MfHt];

    pub fn name(self) -> &'static str {
        match self {
            Detector::DeepMf => "deep-mf",
            Detector::Mf => "mf",
            Detector::MfHt => "mf-ht",
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep-mf" => Ok(Detector::DeepMf),
            "mf" => Ok(Detector::Mf),
            "mf-ht" => Ok(Detector::MfHt),
            other => Err(Error::InvalidArgument(format!("unknown detector `{other}`"))),
        }
    }
}

/// Where the MF-HT template comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateSource {
    /// The built-in synthetic beat.
    Builtin,
    /// Averaged from the evaluated recording's channel 0 at its true
    /// R-peaks, falling back to the built-in beat.
    Recording,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub mfht: MfhtConfig,
    pub mfht_template: TemplateSource,
    pub thresholds: Vec<f64>,
    pub deepmf_threshold: f64,
    pub mf_threshold: f64,
    pub tolerance_ms: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            mfht: MfhtConfig::default(),
            mfht_template: TemplateSource::Recording,
            thresholds: super::default_thresholds(),
            deepmf_threshold: DEEPMF_THRESHOLD,
            mf_threshold: MF_THRESHOLD,
            tolerance_ms: MATCH_TOLERANCE_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFailure {
    pub subject_id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct LosoResult {
    pub detector: Detector,
    /// Operating-point metrics, ordered by subject id.
    pub metrics: Vec<SubjectMetrics>,
    /// Per-subject threshold sweeps (threshold detectors only).
    pub curves: Vec<(String, PrCurve)>,
    pub pooled: Option<PrCurve>,
    /// Trained Deep-MF model per fold.
    pub models: Vec<(String, TrainedModel)>,
    pub failures: Vec<FoldFailure>,
}

impl LosoResult {
    pub fn operating_threshold(&self, cfg: &EvalConfig) -> Option<f64> {
        match self.detector {
            Detector::DeepMf => Some(cfg.deepmf_threshold),
            Detector::Mf => Some(cfg.mf_threshold),
            Detector::MfHt => None,
        }
    }
}

fn metrics_at(score: &SignalTrace, truth: &PeakSet, threshold: f64, subject: &str, tol_ms: f64) -> SubjectMetrics {
    let peaks = find_peaks(score, &detection_constraints(threshold));
    SubjectMetrics::from_match(subject, &match_peaks(&peaks, truth, score.fs(), tol_ms))
}

fn mfht_template(rec: &PreparedRecording, source: TemplateSource) -> EcgTemplate {
    match source {
        TemplateSource::Builtin => EcgTemplate::builtin(),
        TemplateSource::Recording => {
            build_template(&rec.channel_trace(0), &rec.truth).unwrap_or_else(|_| EcgTemplate::builtin())
        }
    }
}

struct Fold {
    metrics: SubjectMetrics,
    curve: Option<PrCurve>,
    model: Option<TrainedModel>,
}

fn run_fold(recs: &[PreparedRecording], held_out: &str, detector: Detector, cfg: &EvalConfig) -> Result<Fold> {
    let (train, test) = loso_split(recs, held_out)?;
    let rec = test[0];
    match detector {
        Detector::DeepMf => {
            if train.is_empty() {
                return Err(Error::InsufficientData("no training subjects".into()));
            }
            let model = fit(&EcgTemplate::builtin(), &cfg.train, &train, &test)?;
            let score = infer_prepared(rec, &model.trained.params)?;
            Ok(Fold {
                metrics: metrics_at(&score, &rec.truth, cfg.deepmf_threshold, held_out, cfg.tolerance_ms),
                curve: Some(pr_sweep(&score, &rec.truth, &cfg.thresholds)?),
                model: Some(model),
            })
        }
        Detector::Mf => {
            let score = matched_filter(&rec.channel_trace(0), &EcgTemplate::builtin())?;
            Ok(Fold {
                metrics: metrics_at(&score, &rec.truth, cfg.mf_threshold, held_out, cfg.tolerance_ms),
                curve: Some(pr_sweep(&score, &rec.truth, &cfg.thresholds)?),
                model: None,
            })
        }
        Detector::MfHt => {
            let template = mfht_template(rec, cfg.mfht_template);
            let peaks = mfht_detect(&rec.channel_trace(0), &template, &cfg.mfht)?;
            let m = match_peaks(&peaks, &rec.truth, rec.reference.fs(), cfg.tolerance_ms);
            Ok(Fold {
                metrics: SubjectMetrics::from_match(held_out, &m),
                curve: None,
                model: None,
            })
        }
    }
}

/// Leave-one-subject-out evaluation of one detector.
///
/// Each subject is held out in turn; Deep-MF trains both phases on the
/// others. A failing fold is recorded and the run continues.
pub fn run_loso(recs: &[PreparedRecording], detector: Detector, cfg: &EvalConfig) -> Result<LosoResult> {
    run_loso_observed(recs, detector, cfg, &mut |_, _| {})
}

/// [`run_loso`], reporting each finished fold to `observer`.
pub fn run_loso_observed(
    recs: &[PreparedRecording],
    detector: Detector,
    cfg: &EvalConfig,
    observer: &mut dyn FnMut(&str, std::result::Result<&SubjectMetrics, &Error>),
) -> Result<LosoResult> {
    let mut ids = subject_ids(recs);
    if ids.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "leave-one-subject-out needs at least 2 subjects, got {}",
            ids.len()
        )));
    }
    ids.sort();
    let mut out = LosoResult {
        detector,
        metrics: Vec::new(),
        curves: Vec::new(),
        pooled: None,
        models: Vec::new(),
        failures: Vec::new(),
    };
    for id in &ids {
        match run_fold(recs, id, detector, cfg) {
            Ok(fold) => {
                observer(id, Ok(&fold.metrics));
                out.metrics.push(fold.metrics);
                if let Some(c) = fold.curve {
                    out.curves.push((id.clone(), c));
                }
                if let Some(m) = fold.model {
                    out.models.push((id.clone(), m));
                }
            }
            Err(e) => {
                observer(id, Err(&e));
                out.failures.push(FoldFailure {
                    subject_id: id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    if !out.curves.is_empty() {
        let curves: Vec<PrCurve> = out.curves.iter().map(|(_, c)| c.clone()).collect();
        out.pooled = Some(pooled_curve(&curves)?);
    }
    Ok(out)
}
