use serde::{Deserialize, Serialize};

use crate::dsp::PeakSet;

/// Outcome of pairing predictions with ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `(predicted, true)` index pairs.
    pub pairs: Vec<(usize, usize)>,
}

/// `round(tol_ms * fs / 1000)` samples.
pub fn tolerance_samples(fs: f64, tol_ms: f64) -> usize {
    (tol_ms * fs / 1000.0).round() as usize
}

/// Greedy one-to-one matching: true peaks in order, each taking the nearest
/// unmatched prediction within the tolerance (inclusive; ties go to the
/// earlier prediction).
pub fn match_peaks(predicted: &PeakSet, truth: &PeakSet, fs: f64, tol_ms: f64) -> MatchResult {
    let tol = tolerance_samples(fs, tol_ms);
    let pred = predicted.indices();
    let mut used = vec![false; pred.len()];
    let mut pairs = Vec::new();
    for &t in truth.indices() {
        let start = pred.partition_point(|&p| p + tol < t);
        let mut best: Option<(usize, usize)> = None;
        for (j, &p) in pred.iter().enumerate().skip(start) {
            if p > t + tol {
                break;
            }
            if used[j] {
                continue;
            }
            let d = p.abs_diff(t);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
            pairs.push((pred[j], t));
        }
    }
    let tp = pairs.len();
    MatchResult {
        tp,
        fp: pred.len() - tp,
        fn_: truth.len() - tp,
        pairs,
    }
}

/// `(recall, precision)`. With no true peaks recall is 1; with no
/// predictions precision is 0 unless there were no true peaks either, in
/// which case both are 1.
pub fn recall_precision(m: &MatchResult) -> (f64, f64) {
    let truths = m.tp + m.fn_;
    let preds = m.tp + m.fp;
    match (truths, preds) {
        (0, 0) => (1.0, 1.0),
        (0, _) => (1.0, 0.0),
        (_, 0) => (0.0, 0.0),
        _ => (m.tp as f64 / truths as f64, m.tp as f64 / preds as f64),
    }
}

/// Operating-point result for one held-out subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectMetrics {
    pub subject_id: String,
    pub recall: f64,
    pub precision: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl SubjectMetrics {
    pub fn from_match(subject_id: impl Into<String>, m: &MatchResult) -> Self {
        let (recall, precision) = recall_precision(m);
        Self {
            subject_id: subject_id.into(),
            recall,
            precision,
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
        }
    }
}
