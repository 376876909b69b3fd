use std::io::Write;

use serde::{Deserialize, Serialize};

use super::matching::SubjectMetrics;
use super::sweep::PrCurve;
use crate::stats::quantile;
use crate::{Error, Result};

/// Median and interquartile bounds (linear interpolation between order
/// statistics at `q * (n - 1)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        Ok(Self {
            median: quantile(values, 0.5)?,
            q1: quantile(values, 0.25)?,
            q3: quantile(values, 0.75)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub subjects: usize,
    pub recall: Quartiles,
    pub precision: Quartiles,
}

pub fn summarize(metrics: &[SubjectMetrics]) -> Result<Summary> {
    if metrics.is_empty() {
        return Err(Error::InsufficientData("no subject metrics to summarise".into()));
    }
    let r: Vec<f64> = metrics.iter().map(|m| m.recall).collect();
    let p: Vec<f64> = metrics.iter().map(|m| m.precision).collect();
    Ok(Summary {
        subjects: metrics.len(),
        recall: Quartiles::of(&r)?,
        precision: Quartiles::of(&p)?,
    })
}

/// `subject_id,recall,precision,tp,fp,fn`.
pub fn write_metrics_csv(w: &mut impl Write, metrics: &[SubjectMetrics]) -> Result<()> {
    writeln!(w, "subject_id,recall,precision,tp,fp,fn")?;
    for m in metrics {
        writeln!(w, "{},{},{},{},{},{}", m.subject_id, m.recall, m.precision, m.tp, m.fp, m.fn_)?;
    }
    Ok(())
}

/// `threshold,recall,precision`.
pub fn write_curve_csv(w: &mut impl Write, curve: &PrCurve) -> Result<()> {
    writeln!(w, "threshold,recall,precision")?;
    for p in &curve.points {
        writeln!(w, "{},{},{}", p.threshold, p.recall, p.precision)?;
    }
    Ok(())
}
