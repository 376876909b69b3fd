//! Detection scoring: peak matching, recall/precision, threshold sweeps,
//! leave-one-subject-out runs and summary statistics.
//!
//! Protocol defaults:
//!
//! - a detection matches a true R-peak within 40 ms, i.e. 10 samples at
//!   250 Hz, boundary included;
//! - peaks are picked with a minimum distance of 12 samples and a maximum
//!   half-prominence width of 25 samples;
//! - operating thresholds are 0.11 on Deep-MF scores and 0.90 on matched
//!   filter correlation.

mod loso;
mod matching;
mod report;
mod sweep;

pub use loso::{run_loso, run_loso_observed, Detector, EvalConfig, FoldFailure, LosoResult, TemplateSource};
pub use matching::{match_peaks, recall_precision, tolerance_samples, MatchResult, SubjectMetrics};
pub use report::{summarize, write_curve_csv, write_metrics_csv, Quartiles, Summary};
pub use sweep::{auc, default_thresholds, pooled_curve, pr_sweep, PrCurve, PrPoint};

pub const MATCH_TOLERANCE_MS: f64 = 40.0;
pub const PEAK_MIN_DISTANCE: usize = 12;
pub const PEAK_MAX_WIDTH: f64 = 25.0;
pub const DEEPMF_THRESHOLD: f64 = 0.11;
pub const MF_THRESHOLD: f64 = 0.90;
