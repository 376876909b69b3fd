//! The Deep-MF network: encoder, decoder and R-peak classifier.
//!
//! Layer geometry:
//!
//! | layer | in -> out | kernel | stride | activation | output |
//! |-------|-----------|--------|--------|------------|--------|
//! | L1    | 3 -> 6    | 200    | 1      | ReLU + dropout | 6 x 500 |
//! | L2    | 6 -> 6    | 50     | 2      | ReLU + dropout | 6 x 250 |
//! | L3    | 6 -> 6    | 50     | 2      | ReLU + dropout | 6 x 125 |
//! | L4    | 6 -> 6    | 50     | 2      | Sigmoid + dropout | 6 x 63 |
//! | D1    | 6 -> 6    | 50     | 2      | Sigmoid    | 6 x 125 |
//! | D2    | 6 -> 6    | 50     | 2      |            | 6 x 250 |
//! | D3    | 6 -> 6    | 50     | 2      |            | 6 x 500 |
//! | D4    | 6 -> 1    | 200    | 1      |            | 1 x 500 |
//! | C1    | 6 -> 6    | 50     | 1      | Sigmoid    | 6 x 63  |
//! | FC    | 378 -> 500 |       |        |            | 500     |
//!
//! The first six L1 kernels on input channel 0 can start as circularly
//! shifted copies of an ECG template.

mod infer;
mod kernels;
mod model;
mod store;
mod template;
mod train;

pub use infer::{infer_channels, infer_prepared, infer_stream, window_count};
pub use kernels::{export_kernels, export_kernels_of, join_taps, kernel_shift, KernelExport, KernelInfo};
pub use model::{
    ClassifierCache, DecoderCache, DeepMfParams, EncoderCache, EncoderMasks, InitSpec, Mode, ParamGroup,
    CLASSIFIER_IN, DEFAULT_SHIFTS, ENCODER_LENS, HIDDEN_CHANNELS, INFERENCE_KERNELS, INPUT_LEN, LATENT_LEN,
};
pub use store::DeepMfModel;
pub use template::{build_template, EcgTemplate, MIN_TEMPLATE_BEATS, TEMPLATE_CENTER, TEMPLATE_LEN};
pub use train::{
    classifier_loss_and_grad, enc_dec_loss, enc_dec_loss_and_grad, enc_dec_test_loss, latents, train_classifier,
    train_encoder_decoder, EpochLog, TrainConfig,
};

use crate::dataset::PreparedRecording;
use crate::Result;

/// Result of training both phases.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub initial: DeepMfModel,
    pub trained: DeepMfModel,
    pub log: Vec<EpochLog>,
}

/// Initialises from `template` and trains both phases on `train`, logging
/// test losses on `test` when given.
pub fn fit(
    template: &EcgTemplate,
    cfg: &TrainConfig,
    train: &[&PreparedRecording],
    test: &[&PreparedRecording],
) -> Result<TrainedModel> {
    cfg.validate()?;
    let init = InitSpec {
        seed: cfg.seed,
        template_init: cfg.template_init,
        shifts: cfg.template_shifts.clone(),
    };
    let initial = DeepMfModel::init(template.clone(), init)?;
    let train_data = crate::dataset::SegmentBatch::concat(train.iter().copied(), cfg.segment_hop)?;
    let test_data = if test.is_empty() {
        None
    } else {
        Some(crate::dataset::SegmentBatch::concat(test.iter().copied(), crate::dataset::SEGMENT_HOP)?)
    };
    let mut trained = initial.clone();
    let mut log = train_encoder_decoder(&mut trained.params, &train_data, cfg, test_data.as_ref())?;
    log.extend(train_classifier(&mut trained.params, &train_data, cfg, test_data.as_ref())?);
    Ok(TrainedModel { initial, trained, log })
}
