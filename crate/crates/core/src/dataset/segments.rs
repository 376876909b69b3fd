use super::{Recording, SubjectTagged};
use crate::dsp::{decimate, find_peaks, ChannelBank, PeakConstraints, PeakSet, SignalTrace, MODEL_FS};
use crate::nn::Tensor;
use crate::{Error, Result};

/// Window length in samples (2 s at 250 Hz).
pub const SEGMENT_LEN: usize = 500;
/// Window hop in samples (0.4 s at 250 Hz).
pub const SEGMENT_HOP: usize = 100;

/// Fraction of the reference maximum below which reference peaks are ignored.
const REFERENCE_HEIGHT_FRACTION: f64 = 0.4;
const REFERENCE_MIN_DISTANCE: usize = 12;

/// Ground-truth R-peaks of a clean reference trace.
pub fn reference_peaks(reference: &SignalTrace) -> PeakSet {
    let max = reference.samples().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = if max > 0.0 { REFERENCE_HEIGHT_FRACTION * max } else { f64::INFINITY };
    let c = PeakConstraints::new(floor, REFERENCE_MIN_DISTANCE, f64::INFINITY).expect("static constraints");
    find_peaks(reference, &c)
}

/// Ones at `p-1, p, p+1` for every peak `p`, clamped to the trace.
pub fn make_targets(reference: &SignalTrace, peaks: &PeakSet) -> Vec<f64> {
    let n = reference.len();
    let mut t = vec![0.0; n];
    for &p in peaks.indices() {
        for i in p.saturating_sub(1)..=(p + 1).min(n - 1) {
            t[i] = 1.0;
        }
    }
    t
}

/// Min-max scaling to `[0, 1]`; a flat window maps to zeros.
pub fn scale_unit_range(x: &[f64]) -> Vec<f64> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - lo) / span).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentOrigin {
    pub subject_id: String,
    pub start: usize,
}

/// Aligned training windows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentBatch {
    /// `3 x 500` network inputs.
    pub inputs: Vec<Tensor>,
    /// Reference windows scaled to `[0, 1]`.
    pub references: Vec<Vec<f64>>,
    /// Binary R-peak targets.
    pub targets: Vec<Vec<f64>>,
    pub origins: Vec<SegmentOrigin>,
}

impl SegmentBatch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn extend(&mut self, other: SegmentBatch) {
        self.inputs.extend(other.inputs);
        self.references.extend(other.references);
        self.targets.extend(other.targets);
        self.origins.extend(other.origins);
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a PreparedRecording>, hop: usize) -> Result<SegmentBatch> {
        let mut all = SegmentBatch::default();
        for p in parts {
            all.extend(p.segments(hop)?);
        }
        Ok(all)
    }
}

/// A recording at the model rate with its filtered channels and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRecording {
    pub subject_id: String,
    /// Standardised filter-bank channels.
    pub channels: [Vec<f64>; 3],
    pub reference: SignalTrace,
    pub truth: PeakSet,
    pub targets: Vec<f64>,
}

impl SubjectTagged for PreparedRecording {
    fn subject_id(&self) -> &str {
        &self.subject_id
    }
}

fn to_model_rate(trace: &SignalTrace) -> Result<SignalTrace> {
    let ratio = trace.fs() / MODEL_FS;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {} Hz is not an integer multiple of {MODEL_FS} Hz",
            trace.fs()
        )));
    }
    decimate(trace, factor as usize)
}

impl PreparedRecording {
    /// Decimates to 250 Hz if needed, filters and extracts ground truth.
    pub fn from_recording(rec: &Recording) -> Result<Self> {
        Self::with_bank(rec, &ChannelBank::default())
    }

    pub fn with_bank(rec: &Recording, bank: &ChannelBank) -> Result<Self> {
        let ear = to_model_rate(&rec.ear)?;
        let reference = to_model_rate(&rec.reference)?;
        let [a, b, c] = bank.apply(&ear)?;
        let truth = reference_peaks(&reference);
        let targets = make_targets(&reference, &truth);
        Ok(Self {
            subject_id: rec.subject_id.clone(),
            channels: [a.into_samples(), b.into_samples(), c.into_samples()],
            reference,
            truth,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// Channel `c` as a 250 Hz trace.
    pub fn channel_trace(&self, c: usize) -> SignalTrace {
        SignalTrace::new(self.channels[c].clone(), MODEL_FS).expect("filtered channels are finite")
    }

    pub fn window_count(&self, hop: usize) -> usize {
        window_count(self.len(), hop)
    }

    pub fn window_input(&self, start: usize) -> Tensor {
        let rows: Vec<&[f64]> = self.channels.iter().map(|c| &c[start..start + SEGMENT_LEN]).collect();
        Tensor::from_channels(&rows).expect("equal-length windows")
    }

    pub fn segments(&self, hop: usize) -> Result<SegmentBatch> {
        if hop == 0 {
            return Err(Error::InvalidArgument("segment hop must be >= 1".into()));
        }
        if self.len() < SEGMENT_LEN {
            return Err(Error::Length(format!(
                "{}: {} samples is shorter than one {SEGMENT_LEN}-sample window",
                self.subject_id,
                self.len()
            )));
        }
        let mut batch = SegmentBatch::default();
        let reference = self.reference.samples();
        for k in 0..self.window_count(hop) {
            let s = k * hop;
            batch.inputs.push(self.window_input(s));
            batch.references.push(scale_unit_range(&reference[s..s + SEGMENT_LEN]));
            batch.targets.push(self.targets[s..s + SEGMENT_LEN].to_vec());
            batch.origins.push(SegmentOrigin {
                subject_id: self.subject_id.clone(),
                start: s,
            });
        }
        Ok(batch)
    }
}

/// `floor((len - 500) / hop) + 1`, or 0 when shorter than a window.
pub fn window_count(len: usize, hop: usize) -> usize {
    if len < SEGMENT_LEN {
        0
    } else {
        (len - SEGMENT_LEN) / hop + 1
    }
}

/// Windows of a 250 Hz recording at the standard hop.
pub fn segment(rec: &Recording) -> Result<SegmentBatch> {
    if (rec.fs() - MODEL_FS).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "segmentation expects {MODEL_FS} Hz, got {} Hz",
            rec.fs()
        )));
    }
    PreparedRecording::from_recording(rec)?.segments(SEGMENT_HOP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, SynthConfig};

    fn flat(n: usize) -> SignalTrace {
        SignalTrace::new(vec![0.0; n], MODEL_FS).unwrap()
    }

    #[test]
    fn targets_mark_neighbours() {
        let r = flat(500);
        let t = make_targets(&r, &PeakSet::new(vec![250], vec![1.0]).unwrap());
        let ones: Vec<usize> = (0..500).filter(|&i| t[i] == 1.0).collect();
        assert_eq!(ones, vec![249, 250, 251]);
        let t = make_targets(&r, &PeakSet::new(vec![0, 499], vec![1.0, 1.0]).unwrap());
        let ones: Vec<usize> = (0..500).filter(|&i| t[i] == 1.0).collect();
        assert_eq!(ones, vec![0, 1, 498, 499]);
        assert!(make_targets(&r, &PeakSet::empty()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_count(75_000, 100), 746);
        assert_eq!(window_count(500, 100), 1);
        assert_eq!(window_count(499, 100), 0);
        assert_eq!(window_count(15_000, 100), 146);
    }

    #[test]
    fn segments_line_up_with_recording() {
        let cfg = SynthConfig {
            n_subjects: 1,
            duration_s: 12.0,
            fs: 250.0,
            mains_amplitude: 0.0,
            ..SynthConfig::default()
        };
        let rec = &synthesize(&cfg).unwrap()[0];
        let batch = segment(rec).unwrap();
        let prepared = PreparedRecording::from_recording(rec).unwrap();
        assert_eq!(batch.len(), (3000 - 500) / 100 + 1);
        for k in [0, 7, batch.len() - 1] {
            assert_eq!(batch.origins[k].start, 100 * k);
            assert_eq!(batch.inputs[k].channel(1), &prepared.channels[1][100 * k..100 * k + 500]);
            let r = &batch.references[k];
            assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let too_short = Recording::new("x", flat(400), flat(400)).unwrap();
        assert!(matches!(segment(&too_short), Err(Error::Length(_))));
    }

    #[test]
    fn scaling_guards_flat_windows() {
        assert_eq!(scale_unit_range(&[2.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(scale_unit_range(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
    }
}
