//! Recordings, synthetic ear-ECG, windowing, targets and subject splits.

mod io;
mod segments;
mod synth;

pub use io::{load_recording, load_recordings, save_recording, sidecar_path, RecordingMeta};
pub use segments::{
    make_targets, reference_peaks, scale_unit_range, segment, window_count as segments_window_count, PreparedRecording, SegmentBatch, SegmentOrigin,
    SEGMENT_HOP, SEGMENT_LEN,
};
pub use synth::{subject_id, synthesize, synthesize_subject, SynthConfig};

/// Nominal `(amplitude, offset_s, width_s)` of the synthetic P, Q, R, S, T bumps.
pub fn synth_bumps() -> &'static [(f64, f64, f64)] {
    &synth::BUMPS
}

use crate::dsp::SignalTrace;
use crate::{Error, Result};

/// Shortest recording accepted for experiments, in seconds.
pub const MIN_EXPERIMENT_S: f64 = 120.0;

/// Simultaneous ear and reference ECG from one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub ear: SignalTrace,
    pub reference: SignalTrace,
}

impl Recording {
    pub fn new(subject_id: impl Into<String>, ear: SignalTrace, reference: SignalTrace) -> Result<Self> {
        if ear.fs() != reference.fs() || ear.len() != reference.len() {
            return Err(Error::Shape(format!(
                "ear ({} @ {} Hz) and reference ({} @ {} Hz) disagree",
                ear.len(),
                ear.fs(),
                reference.len(),
                reference.fs()
            )));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            ear,
            reference,
        })
    }

    pub fn fs(&self) -> f64 {
        self.ear.fs()
    }

    pub fn duration_s(&self) -> f64 {
        self.ear.duration_s()
    }
}

/// Anything that belongs to exactly one subject.
pub trait SubjectTagged {
    fn subject_id(&self) -> &str;
}

impl SubjectTagged for Recording {
    fn subject_id(&self) -> &str {
        &self.subject_id
    }
}

/// Leave-one-subject-out partition: `(train, test)`.
pub fn loso_split<'a, T: SubjectTagged>(items: &'a [T], held_out: &str) -> Result<(Vec<&'a T>, Vec<&'a T>)> {
    let (test, train): (Vec<&T>, Vec<&T>) = items.iter().partition(|r| r.subject_id() == held_out);
    if test.is_empty() {
        return Err(Error::UnknownSubject(held_out.to_string()));
    }
    debug_assert!(train.iter().all(|r| r.subject_id() != held_out));
    Ok((train, test))
}

/// Distinct subject ids in first-seen order.
pub fn subject_ids<T: SubjectTagged>(items: &[T]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for r in items {
        if !ids.iter().any(|s| s == r.subject_id()) {
            ids.push(r.subject_id().to_string());
        }
    }
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str) -> Recording {
        let t = SignalTrace::new(vec![0.0; 10], 250.0).unwrap();
        Recording::new(id, t.clone(), t).unwrap()
    }

    #[test]
    fn split_partitions_subjects() {
        let recs: Vec<Recording> = (1..=36).map(|i| rec(&format!("s{i:02}"))).collect();
        let (train, test) = loso_split(&recs, "s07").unwrap();
        assert_eq!(train.len(), 35);
        assert_eq!(test.len(), 1);
        assert_eq!(test[0].subject_id, "s07");
        assert!(matches!(loso_split(&recs, "s99"), Err(Error::UnknownSubject(_))));
        let two = [rec("a"), rec("b")];
        let (tr, te) = loso_split(&two, "b").unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
    }

    #[test]
    fn mismatched_channels_rejected() {
        let a = SignalTrace::new(vec![0.0; 10], 250.0).unwrap();
        let b = SignalTrace::new(vec![0.0; 11], 250.0).unwrap();
        assert!(Recording::new("x", a.clone(), b).is_err());
        let c = SignalTrace::new(vec![0.0; 10], 500.0).unwrap();
        assert!(Recording::new("x", a, c).is_err());
    }
}
