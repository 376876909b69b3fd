//! Constrained local-maximum detection.
//!
//! Semantics:
//! - a peak is a sample strictly greater than its neighbours; for a flat
//!   maximum the left-most sample of the plateau is reported,
//! - prominence is the height above the higher of the two bases, each base
//!   being the minimum between the peak and the nearest strictly higher sample
//!   (or the signal edge) on that side,
//! - width is measured at half prominence with linear interpolation between
//!   samples, the search bounded by the bases,
//! - height and width filters apply first; among survivors closer than
//!   `min_distance` the taller wins, ties going to the lower index.

use std::collections::BTreeMap;

use super::SignalTrace;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConstraints {
    pub min_height: f64,
    pub min_distance: usize,
    pub max_width: f64,
}

impl PeakConstraints {
    pub fn new(min_height: f64, min_distance: usize, max_width: f64) -> Result<Self> {
        if min_distance < 1 {
            return Err(Error::InvalidArgument("min_distance must be >= 1".into()));
        }
        if max_width.is_nan() || max_width < 1.0 {
            return Err(Error::InvalidArgument("max_width must be >= 1".into()));
        }
        Ok(Self {
            min_height,
            min_distance,
            max_width,
        })
    }

    /// No height floor, distance 1 and unbounded width: every local maximum.
    pub fn unconstrained() -> Self {
        Self {
            min_height: f64::NEG_INFINITY,
            min_distance: 1,
            max_width: f64::INFINITY,
        }
    }
}

/// Ordered peak positions with their sample values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeakSet {
    indices: Vec<usize>,
    heights: Vec<f64>,
}

impl PeakSet {
    pub fn new(indices: Vec<usize>, heights: Vec<f64>) -> Result<Self> {
        if indices.len() != heights.len() {
            return Err(Error::Shape(format!(
                "{} indices but {} heights",
                indices.len(),
                heights.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "peak indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { indices, heights })
    }

    /// Peaks at `indices` with heights read from `samples`.
    pub fn from_indices(indices: Vec<usize>, samples: &[f64]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= samples.len()) {
            return Err(Error::InvalidArgument(format!(
                "peak index {i} outside a trace of {} samples",
                samples.len()
            )));
        }
        let heights = indices.iter().map(|&i| samples[i]).collect();
        Self::new(indices, heights)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
    pub width: f64,
}

/// All local maxima of a signal with their prominence and width.
///
/// These do not depend on the selection thresholds, so a threshold sweep
/// analyses once and selects many times.
#[derive(Debug, Clone)]
pub struct PeakCandidates {
    /// Sorted by descending height, ties by ascending index.
    by_priority: Vec<Candidate>,
}

impl PeakCandidates {
    pub fn analyze(x: &[f64]) -> Self {
        let mut by_priority: Vec<Candidate> = local_maxima(x)
            .into_iter()
            .map(|p| {
                let (prominence, left_base, right_base) = prominence(x, p);
                Candidate {
                    index: p,
                    height: x[p],
                    prominence,
                    width: half_prominence_width(x, p, prominence, left_base, right_base),
                }
            })
            .collect();
        by_priority.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.index.cmp(&b.index)));
        Self { by_priority }
    }

    pub fn len(&self) -> usize {
        self.by_priority.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_priority.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Candidate> {
        self.by_priority.iter()
    }

    pub fn select(&self, c: &PeakConstraints) -> PeakSet {
        let mut kept: BTreeMap<usize, f64> = BTreeMap::new();
        let reach = c.min_distance - 1;
        for cand in &self.by_priority {
            if cand.height < c.min_height {
                // Priority order is by height, nothing later can pass.
                break;
            }
            if cand.width > c.max_width {
                continue;
            }
            let lo = cand.index.saturating_sub(reach);
            let hi = cand.index + reach;
            if kept.range(lo..=hi).next().is_none() {
                kept.insert(cand.index, cand.height);
            }
        }
        let (indices, heights) = kept.into_iter().unzip();
        PeakSet { indices, heights }
    }
}

fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut i = 1;
    while i < n - 1 {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < n - 1 && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push(i);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn prominence(x: &[f64], peak: usize) -> (f64, usize, usize) {
    let h = x[peak];
    let mut left_min = h;
    let mut left_base = peak;
    let mut i = peak as isize;
    while i >= 0 && x[i as usize] <= h {
        if x[i as usize] < left_min {
            left_min = x[i as usize];
            left_base = i as usize;
        }
        i -= 1;
    }
    let mut right_min = h;
    let mut right_base = peak;
    let mut j = peak;
    while j < x.len() && x[j] <= h {
        if x[j] < right_min {
            right_min = x[j];
            right_base = j;
        }
        j += 1;
    }
    (h - left_min.max(right_min), left_base, right_base)
}

fn half_prominence_width(x: &[f64], peak: usize, prom: f64, left_base: usize, right_base: usize) -> f64 {
    let level = x[peak] - prom / 2.0;
    let mut i = peak;
    while left_base < i && level < x[i] {
        i -= 1;
    }
    let mut left = i as f64;
    if x[i] < level {
        left += (level - x[i]) / (x[i + 1] - x[i]);
    }
    let mut j = peak;
    while j < right_base && level < x[j] {
        j += 1;
    }
    let mut right = j as f64;
    if x[j] < level {
        right -= (level - x[j]) / (x[j - 1] - x[j]);
    }
    right - left
}

pub fn find_peaks_in(x: &[f64], c: &PeakConstraints) -> PeakSet {
    PeakCandidates::analyze(x).select(c)
}

/// Constrained peak detection; an empty set is a valid result.
pub fn find_peaks(trace: &SignalTrace, c: &PeakConstraints) -> PeakSet {
    find_peaks_in(trace.samples(), c)
}
