//! Two-phase training: encoder-decoder on reference reconstruction, then the
//! classifier on frozen eval-mode latents.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{DeepMfParams, EncoderMasks, Mode, ParamGroup};
use crate::dataset::{SegmentBatch, SEGMENT_HOP};
use crate::nn::{mse_loss, AdamConfig, AdamState, Tensor};
use crate::{seeds, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub enc_dec_epochs: usize,
    pub classifier_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub template_init: bool,
    pub dropout_p: f64,
    pub template_shifts: Vec<i64>,
    /// Hop between training windows, samples.
    pub segment_hop: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            enc_dec_epochs: 10,
            classifier_epochs: 15,
            batch_size: 10,
            lr: AdamConfig::default().lr,
            seed: 0,
            template_init: true,
            dropout_p: 0.5,
            template_shifts: super::model::DEFAULT_SHIFTS.to_vec(),
            segment_hop: SEGMENT_HOP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.segment_hop == 0 {
            return Err(Error::Config("batch_size and segment_hop must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub phase: String,
    pub epoch: usize,
    pub mean_loss: f64,
    pub test_loss: Option<f64>,
}

/// Reconstruction loss and gradient for one segment; gradients accumulate.
pub fn enc_dec_loss_and_grad(
    params: &DeepMfParams,
    x: &Tensor,
    reference: &[f64],
    mode: Mode<'_>,
    grads: &mut DeepMfParams,
) -> Result<f64> {
    let (z, enc) = params.encode_cached(x, mode)?;
    let (y, dec) = params.decode_cached(&z)?;
    let (loss, g) = mse_loss(&y, reference)?;
    let gz = params.decode_backward(&dec, &g, grads)?;
    params.encode_backward(&enc, mode, &gz, grads)?;
    Ok(loss)
}

pub fn enc_dec_loss(params: &DeepMfParams, x: &Tensor, reference: &[f64], mode: Mode<'_>) -> Result<f64> {
    let z = params.encode(x, mode)?;
    Ok(mse_loss(&params.decode(&z)?, reference)?.0)
}

/// Classifier loss and gradient for one latent; gradients accumulate.
pub fn classifier_loss_and_grad(params: &DeepMfParams, z: &Tensor, target: &[f64], grads: &mut DeepMfParams) -> Result<f64> {
    let (y, cache) = params.classify_cached(z)?;
    let (loss, g) = mse_loss(&y, target)?;
    params.classify_backward(&cache, &g, grads)?;
    Ok(loss)
}

/// Mean eval-mode reconstruction loss.
pub fn enc_dec_test_loss(params: &DeepMfParams, data: &SegmentBatch) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty evaluation set".into()));
    }
    let mut total = 0.0;
    for (x, r) in data.inputs.iter().zip(&data.references) {
        total += enc_dec_loss(params, x, r, Mode::Eval)?;
    }
    Ok(total / data.len() as f64)
}

fn check_finite(loss: f64, phase: &str, epoch: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("{phase} loss became {loss} in epoch {epoch}")));
    }
    Ok(())
}

/// Runs mini-batch Adam over `n` items; `step` returns one item's loss and
/// accumulates its gradient.
fn run_epochs(
    params: &mut DeepMfParams,
    group: ParamGroup,
    n: usize,
    epochs: usize,
    cfg: &TrainConfig,
    phase: &str,
    mut step: impl FnMut(&DeepMfParams, usize, &mut DeepMfParams) -> Result<f64>,
    mut test_loss: impl FnMut(&DeepMfParams) -> Result<Option<f64>>,
) -> Result<Vec<EpochLog>> {
    let sizes: Vec<usize> = params.slices(group).iter().map(|s| s.len()).collect();
    let mut adam = AdamState::new(cfg.adam(), &sizes);
    let mut grads = DeepMfParams::zeros();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = seeds::rng(cfg.seed, &format!("{phase}/shuffle"));
    let mut log = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill_zero(group);
            for &i in batch {
                total += step(params, i, &mut grads)?;
            }
            grads.scale(group, 1.0 / batch.len() as f64);
            let g = grads.slices(group);
            adam.step(&mut params.slices_mut(group), &g)?;
        }
        let mean_loss = total / n as f64;
        check_finite(mean_loss, phase, epoch)?;
        log.push(EpochLog {
            phase: phase.to_string(),
            epoch,
            mean_loss,
            test_loss: test_loss(params)?,
        });
    }
    Ok(log)
}

/// Phase one: minimise MSE between the decoded latent and the scaled
/// reference. Dropout masks are drawn per segment from the seed.
pub fn train_encoder_decoder(
    params: &mut DeepMfParams,
    data: &SegmentBatch,
    cfg: &TrainConfig,
    test: Option<&SegmentBatch>,
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("no training segments".into()));
    }
    let mut dropout_rng = seeds::rng(cfg.seed, "encdec/dropout");
    let p = cfg.dropout_p;
    run_epochs(
        params,
        ParamGroup::EncoderDecoder,
        data.len(),
        cfg.enc_dec_epochs,
        cfg,
        "encdec",
        |params, i, grads| {
            let masks = EncoderMasks::sample(p, &mut dropout_rng)?;
            enc_dec_loss_and_grad(params, &data.inputs[i], &data.references[i], Mode::Train(&masks), grads)
        },
        |params| test.map(|t| enc_dec_test_loss(params, t)).transpose(),
    )
}

/// Eval-mode latents of every segment.
pub fn latents(params: &DeepMfParams, data: &SegmentBatch) -> Result<Vec<Tensor>> {
    data.inputs.iter().map(|x| params.encode(x, Mode::Eval)).collect()
}

fn classifier_test_loss(params: &DeepMfParams, latents: &[Tensor], targets: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (z, t) in latents.iter().zip(targets) {
        total += mse_loss(&params.classify(z)?, t)?.0;
    }
    Ok(total / latents.len() as f64)
}

/// Phase two: fit the classifier to the binary targets. The encoder is only
/// read, once, to produce the latents.
pub fn train_classifier(
    params: &mut DeepMfParams,
    data: &SegmentBatch,
    cfg: &TrainConfig,
    test: Option<&SegmentBatch>,
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("no training segments".into()));
    }
    let train_z = latents(params, data)?;
    let test_z = test.map(|t| latents(params, t)).transpose()?;
    run_epochs(
        params,
        ParamGroup::Classifier,
        data.len(),
        cfg.classifier_epochs,
        cfg,
        "classifier",
        |params, i, grads| classifier_loss_and_grad(params, &train_z[i], &data.targets[i], grads),
        |params| match (&test_z, test) {
            (Some(z), Some(t)) if !z.is_empty() => classifier_test_loss(params, z, &t.targets).map(Some),
            _ => Ok(None),
        },
    )
}
