use serde::{Deserialize, Serialize};

use super::matching::{match_peaks, recall_precision};
use super::{MATCH_TOLERANCE_MS, PEAK_MAX_WIDTH, PEAK_MIN_DISTANCE};
use crate::dsp::{PeakCandidates, PeakConstraints, PeakSet, SignalTrace};
use crate::stats::median;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Threshold-swept recall/precision with its area under the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub auc: f64,
}

impl PrCurve {
    /// Validates ordering and computes the AUC.
    pub fn new(points: Vec<PrPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a PR curve needs at least one threshold".into()));
        }
        for w in points.windows(2) {
            if !(w[1].threshold > w[0].threshold) {
                return Err(Error::InvalidArgument(format!(
                    "thresholds must be strictly increasing ({} then {})",
                    w[0].threshold, w[1].threshold
                )));
            }
            if w[1].recall > w[0].recall {
                return Err(Error::Invariant(format!(
                    "recall rose from {} to {} between thresholds {} and {}",
                    w[0].recall, w[1].recall, w[0].threshold, w[1].threshold
                )));
            }
        }
        let auc = auc(&points);
        Ok(Self { points, auc })
    }

    pub fn at(&self, threshold: f64) -> Option<&PrPoint> {
        self.points.iter().find(|p| p.threshold == threshold)
    }
}

/// `0.00, 0.01, ..., 1.00`.
pub fn default_thresholds() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Trapezoidal area over the points sorted by recall, extended at constant
/// precision to recall 0 and recall 1.
pub fn auc(points: &[PrPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.recall, p.precision)).collect();
    // Stable on ties: thresholds descend within equal recall.
    pts.reverse();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let mut path = Vec::with_capacity(pts.len() + 2);
    path.push((0.0, first.1));
    path.extend(pts);
    path.push((1.0, last.1));
    let area: f64 = path
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    area.clamp(0.0, 1.0)
}

/// Recall and precision of `score` peaks against `truth` for each threshold.
pub fn pr_sweep(score: &SignalTrace, truth: &PeakSet, thresholds: &[f64]) -> Result<PrCurve> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("no thresholds to sweep".into()));
    }
    let candidates = PeakCandidates::analyze(score.samples());
    let points = thresholds
        .iter()
        .map(|&th| {
            let c = PeakConstraints::new(th, PEAK_MIN_DISTANCE, PEAK_MAX_WIDTH)?;
            let m = match_peaks(&candidates.select(&c), truth, score.fs(), MATCH_TOLERANCE_MS);
            let (recall, precision) = recall_precision(&m);
            Ok(PrPoint {
                threshold: th,
                recall,
                precision,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PrCurve::new(points)
}

/// Per-threshold median recall and median precision across subjects.
pub fn pooled_curve(curves: &[PrCurve]) -> Result<PrCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InsufficientData("no curves to pool".into()))?;
    let thresholds: Vec<f64> = first.points.iter().map(|p| p.threshold).collect();
    if curves
        .iter()
        .any(|c| c.points.iter().map(|p| p.threshold).ne(thresholds.iter().copied()))
    {
        return Err(Error::Shape("curves were swept over different thresholds".into()));
    }
    let points = thresholds
        .iter()
        .enumerate()
        .map(|(i, &th)| {
            let r: Vec<f64> = curves.iter().map(|c| c.points[i].recall).collect();
            let p: Vec<f64> = curves.iter().map(|c| c.points[i].precision).collect();
            Ok(PrPoint {
                threshold: th,
                recall: median(&r)?,
                precision: median(&p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PrCurve::new(points)
}
