use super::model::DeepMfParams;
use crate::dataset::{PreparedRecording, SEGMENT_HOP, SEGMENT_LEN};
use crate::dsp::{preprocess_channels, SignalTrace, MODEL_FS};
use crate::nn::Tensor;
use crate::{Error, Result};

/// Number of windows a rolling pass over `len` samples evaluates.
pub fn window_count(len: usize) -> usize {
    crate::dataset::segments_window_count(len, SEGMENT_HOP)
}

/// Rolling-window scores over already filtered channels.
///
/// Every output sample is the mean of the window scores covering it;
/// samples after the last full window are covered by none and score 0.
pub fn infer_channels(channels: &[Vec<f64>; 3], params: &DeepMfParams) -> Result<Vec<f64>> {
    let len = channels[0].len();
    if len < SEGMENT_LEN {
        return Err(Error::Length(format!(
            "{len} samples is shorter than one {SEGMENT_LEN}-sample window"
        )));
    }
    let mut sum = vec![0.0; len];
    let mut count = vec![0u32; len];
    for w in 0..window_count(len) {
        let s = w * SEGMENT_HOP;
        let rows: Vec<&[f64]> = channels.iter().map(|c| &c[s..s + SEGMENT_LEN]).collect();
        let scores = params.score_window(&Tensor::from_channels(&rows)?)?;
        for (k, v) in scores.into_iter().enumerate() {
            sum[s + k] += v;
            count[s + k] += 1;
        }
    }
    Ok(sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect())
}

/// Full pipeline from a raw 250 Hz ear trace to a score trace.
pub fn infer_stream(trace: &SignalTrace, params: &DeepMfParams) -> Result<SignalTrace> {
    if trace.len() < SEGMENT_LEN {
        return Err(Error::Length(format!(
            "{} samples is shorter than one {SEGMENT_LEN}-sample window",
            trace.len()
        )));
    }
    let [a, b, c] = preprocess_channels(trace)?;
    let channels = [a.into_samples(), b.into_samples(), c.into_samples()];
    SignalTrace::new(infer_channels(&channels, params)?, MODEL_FS)
}

pub fn infer_prepared(rec: &PreparedRecording, params: &DeepMfParams) -> Result<SignalTrace> {
    SignalTrace::new(infer_channels(&rec.channels, params)?, MODEL_FS)
}
