//! Network parameters, initialisation and the three forward/backward paths.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EcgTemplate;
use crate::nn::{Activation, Conv1d, ConvTranspose1d, DropoutMask, Linear, Tensor};
use crate::{seeds, Error, Result};

pub const INPUT_CHANNELS: usize = 3;
pub const INPUT_LEN: usize = 500;
pub const HIDDEN_CHANNELS: usize = 6;
pub const LATENT_LEN: usize = 63;
pub const CLASSIFIER_IN: usize = HIDDEN_CHANNELS * LATENT_LEN;
/// Encoder plus classifier-conv kernels.
pub const INFERENCE_KERNELS: usize = 162;

/// `(in, out, kernel, stride, activation)` per encoder layer.
pub const ENCODER: [(usize, usize, usize, usize, Activation); 4] = [
    (3, 6, 200, 1, Activation::Relu),
    (6, 6, 50, 2, Activation::Relu),
    (6, 6, 50, 2, Activation::Relu),
    (6, 6, 50, 2, Activation::Sigmoid),
];
/// `(in, out, kernel, stride, target_len)` per decoder layer.
pub const DECODER: [(usize, usize, usize, usize, usize); 4] = [
    (6, 6, 50, 2, 125),
    (6, 6, 50, 2, 250),
    (6, 6, 50, 2, 500),
    (6, 1, 200, 1, 500),
];
pub const CLASSIFIER_KERNEL: usize = 50;
/// Encoder output lengths, layer by layer.
pub const ENCODER_LENS: [usize; 4] = [500, 250, 125, 63];

pub const DEFAULT_SHIFTS: [i64; 6] = [-50, -30, -10, 10, 30, 50];

/// Everything that shapes the initial parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub seed: u64,
    pub template_init: bool,
    /// Circular shifts applied to the template for L1 kernels `w[o][0]`.
    pub shifts: Vec<i64>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            template_init: true,
            shifts: DEFAULT_SHIFTS.to_vec(),
        }
    }
}

/// Which parameters a flat view covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    EncoderDecoder,
    Classifier,
    All,
}

/// All trainable weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepMfParams {
    pub encoder: [Conv1d; 4],
    pub decoder: [ConvTranspose1d; 4],
    pub classifier_conv: Conv1d,
    pub classifier_linear: Linear,
}

/// Fixed dropout masks for the four encoder layer outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderMasks(pub [DropoutMask; 4]);

impl EncoderMasks {
    pub fn sample(p: f64, rng: &mut impl Rng) -> Result<Self> {
        let m = |i: usize, rng: &mut _| DropoutMask::sample(HIDDEN_CHANNELS * ENCODER_LENS[i], p, rng);
        Ok(Self([m(0, rng)?, m(1, rng)?, m(2, rng)?, m(3, rng)?]))
    }
}

/// Train mode applies the given dropout masks; eval mode applies none.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Eval,
    Train(&'a EncoderMasks),
}

/// Intermediate values kept for the encoder backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// Input to each layer (the previous layer's dropped-out activation).
    inputs: [Tensor; 4],
    /// Pre-activation of each layer.
    pre: [Tensor; 4],
}

#[derive(Debug, Clone)]
pub struct DecoderCache {
    /// Inputs of D1..D4 (D2's input is the Sigmoid output).
    inputs: [Tensor; 4],
    /// D1 output before its Sigmoid.
    d1_pre: Tensor,
}

#[derive(Debug, Clone)]
pub struct ClassifierCache {
    latent: Tensor,
    pre: Tensor,
    flat: Vec<f64>,
}

fn mask_apply(mode: Mode<'_>, layer: usize, t: Tensor) -> Result<Tensor> {
    match mode {
        Mode::Eval => Ok(t),
        Mode::Train(m) => m.0[layer].apply(&t),
    }
}

impl DeepMfParams {
    /// Random initialisation, uniform in `±1/sqrt(fan_in)`, drawn in
    /// declaration order from `seed`; then, if requested, the first six L1
    /// kernels on input channel 0 are replaced by shifted templates scaled to
    /// the random-init RMS.
    pub fn init(template: &EcgTemplate, spec: &InitSpec) -> Result<Self> {
        let mut rng = seeds::rng(spec.seed, "init");
        let encoder = ENCODER.map(|(i, o, k, s, _)| Conv1d::init_uniform(i, o, k, s, &mut rng));
        let decoder = DECODER.map(|(i, o, k, s, _)| ConvTranspose1d::init_uniform(i, o, k, s, &mut rng));
        let classifier_conv = Conv1d::init_uniform(HIDDEN_CHANNELS, HIDDEN_CHANNELS, CLASSIFIER_KERNEL, 1, &mut rng);
        let classifier_linear = Linear::init_uniform(CLASSIFIER_IN, INPUT_LEN, &mut rng);
        let mut params = Self {
            encoder,
            decoder,
            classifier_conv,
            classifier_linear,
        };
        if spec.template_init {
            params.apply_template(template, &spec.shifts)?;
        }
        params.validate()?;
        Ok(params)
    }

    /// RMS of a uniform `±1/sqrt(fan_in)` L1 weight.
    pub fn l1_init_rms() -> f64 {
        let (i, _, k, _, _) = ENCODER[0];
        1.0 / ((i * k) as f64).sqrt() / 3f64.sqrt()
    }

    fn apply_template(&mut self, template: &EcgTemplate, shifts: &[i64]) -> Result<()> {
        if shifts.len() > HIDDEN_CHANNELS {
            return Err(Error::Config(format!(
                "{} template shifts for {HIDDEN_CHANNELS} kernels",
                shifts.len()
            )));
        }
        let scale = Self::l1_init_rms() / template.rms();
        for (o, &s) in shifts.iter().enumerate() {
            let k = self.encoder[0].kernel_mut(o, 0);
            for (w, v) in k.iter_mut().zip(template.shifted(s)) {
                *w = v * scale;
            }
        }
        Ok(())
    }

    /// All-zero parameters with the standard shapes.
    pub fn zeros() -> Self {
        Self {
            encoder: ENCODER.map(|(i, o, k, s, _)| Conv1d::zeros(i, o, k, s)),
            decoder: DECODER.map(|(i, o, k, s, _)| ConvTranspose1d::zeros(i, o, k, s)),
            classifier_conv: Conv1d::zeros(HIDDEN_CHANNELS, HIDDEN_CHANNELS, CLASSIFIER_KERNEL, 1),
            classifier_linear: Linear::zeros(CLASSIFIER_IN, INPUT_LEN),
        }
    }

    /// Checks every layer shape and the inference kernel budget.
    pub fn validate(&self) -> Result<()> {
        let reference = Self::zeros();
        let same = |a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)| a == b;
        let conv_shape = |c: &Conv1d| (c.in_channels, c.out_channels, c.kernel_len, c.stride);
        let tconv_shape = |c: &ConvTranspose1d| (c.in_channels, c.out_channels, c.kernel_len, c.stride);
        let mut ok = self
            .encoder
            .iter()
            .zip(&reference.encoder)
            .all(|(a, b)| same(conv_shape(a), conv_shape(b)) && a.weight.len() == b.weight.len() && a.bias.len() == b.bias.len());
        ok &= self
            .decoder
            .iter()
            .zip(&reference.decoder)
            .all(|(a, b)| same(tconv_shape(a), tconv_shape(b)) && a.weight.len() == b.weight.len() && a.bias.len() == b.bias.len());
        ok &= same(conv_shape(&self.classifier_conv), conv_shape(&reference.classifier_conv))
            && self.classifier_conv.weight.len() == reference.classifier_conv.weight.len();
        ok &= self.classifier_linear.in_dim == CLASSIFIER_IN
            && self.classifier_linear.out_dim == INPUT_LEN
            && self.classifier_linear.weight.len() == CLASSIFIER_IN * INPUT_LEN
            && self.classifier_linear.bias.len() == INPUT_LEN;
        if !ok {
            return Err(Error::Shape("parameters do not match the Deep-MF architecture".into()));
        }
        let kernels = self.inference_kernel_count();
        if kernels != INFERENCE_KERNELS {
            return Err(Error::Invariant(format!("{kernels} inference kernels, expected {INFERENCE_KERNELS}")));
        }
        Ok(())
    }

    pub fn inference_kernel_count(&self) -> usize {
        self.encoder.iter().map(Conv1d::kernel_count).sum::<usize>() + self.classifier_conv.kernel_count()
    }

    /// `(name, shape, stride)` of every tensor in declaration order.
    pub fn tensor_layout(&self) -> Vec<(String, Vec<usize>, Option<usize>)> {
        let mut out = Vec::new();
        for (i, l) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}.weight"), vec![l.out_channels, l.in_channels, l.kernel_len], Some(l.stride)));
            out.push((format!("encoder.{i}.bias"), vec![l.out_channels], None));
        }
        for (i, l) in self.decoder.iter().enumerate() {
            out.push((format!("decoder.{i}.weight"), vec![l.in_channels, l.out_channels, l.kernel_len], Some(l.stride)));
            out.push((format!("decoder.{i}.bias"), vec![l.out_channels], None));
        }
        let c = &self.classifier_conv;
        out.push(("classifier.conv.weight".into(), vec![c.out_channels, c.in_channels, c.kernel_len], Some(c.stride)));
        out.push(("classifier.conv.bias".into(), vec![c.out_channels], None));
        let l = &self.classifier_linear;
        out.push(("classifier.linear.weight".into(), vec![l.out_dim, l.in_dim], None));
        out.push(("classifier.linear.bias".into(), vec![l.out_dim], None));
        out
    }

    /// Parameter slices of a group in declaration order.
    pub fn slices(&self, group: ParamGroup) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        if group != ParamGroup::Classifier {
            for l in &self.encoder {
                v.push(&l.weight);
                v.push(&l.bias);
            }
            for l in &self.decoder {
                v.push(&l.weight);
                v.push(&l.bias);
            }
        }
        if group != ParamGroup::EncoderDecoder {
            v.push(&self.classifier_conv.weight);
            v.push(&self.classifier_conv.bias);
            v.push(&self.classifier_linear.weight);
            v.push(&self.classifier_linear.bias);
        }
        v
    }

    pub fn slices_mut(&mut self, group: ParamGroup) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        if group != ParamGroup::Classifier {
            for l in &mut self.encoder {
                v.push(&mut l.weight);
                v.push(&mut l.bias);
            }
            for l in &mut self.decoder {
                v.push(&mut l.weight);
                v.push(&mut l.bias);
            }
        }
        if group != ParamGroup::EncoderDecoder {
            v.push(&mut self.classifier_conv.weight);
            v.push(&mut self.classifier_conv.bias);
            v.push(&mut self.classifier_linear.weight);
            v.push(&mut self.classifier_linear.bias);
        }
        v
    }

    pub fn flatten(&self, group: ParamGroup) -> Vec<f64> {
        self.slices(group).concat()
    }

    pub fn assign(&mut self, group: ParamGroup, flat: &[f64]) -> Result<()> {
        let total: usize = self.slices(group).iter().map(|s| s.len()).sum();
        if total != flat.len() {
            return Err(Error::Shape(format!("{} values for {total} parameters", flat.len())));
        }
        let mut offset = 0;
        for s in self.slices_mut(group) {
            let n = s.len();
            s.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn fill_zero(&mut self, group: ParamGroup) {
        for s in self.slices_mut(group) {
            s.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale(&mut self, group: ParamGroup, k: f64) {
        for s in self.slices_mut(group) {
            s.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn encode_cached(&self, x: &Tensor, mode: Mode<'_>) -> Result<(Tensor, EncoderCache)> {
        x.expect_shape(INPUT_CHANNELS, INPUT_LEN, "encoder input")?;
        let mut inputs: Vec<Tensor> = Vec::with_capacity(4);
        let mut pre: Vec<Tensor> = Vec::with_capacity(4);
        let mut a = x.clone();
        for (i, layer) in self.encoder.iter().enumerate() {
            let z = layer.forward(&a)?;
            let h = ENCODER[i].4.forward(&z);
            inputs.push(a);
            pre.push(z);
            a = mask_apply(mode, i, h)?;
        }
        let cache = EncoderCache {
            inputs: inputs.try_into().expect("four layers"),
            pre: pre.try_into().expect("four layers"),
        };
        Ok((a, cache))
    }

    /// Latent representation, `6 x 63`, values in `[0, 1]`.
    pub fn encode(&self, x: &Tensor, mode: Mode<'_>) -> Result<Tensor> {
        Ok(self.encode_cached(x, mode)?.0)
    }

    /// Accumulates encoder gradients for the upstream gradient at the latent.
    /// L1's input gradient is never needed and is not computed.
    pub fn encode_backward(&self, cache: &EncoderCache, mode: Mode<'_>, upstream: &Tensor, grads: &mut DeepMfParams) -> Result<()> {
        let mut g = upstream.clone();
        for i in (0..4).rev() {
            g = mask_apply(mode, i, g)?;
            g = ENCODER[i].4.backward(&cache.pre[i], &g)?;
            let want_input = i > 0;
            if let Some(gx) = self.encoder[i].accumulate_backward(&cache.inputs[i], &g, &mut grads.encoder[i], want_input)? {
                g = gx;
            }
        }
        Ok(())
    }

    pub fn decode_cached(&self, z: &Tensor) -> Result<(Vec<f64>, DecoderCache)> {
        z.expect_shape(HIDDEN_CHANNELS, LATENT_LEN, "decoder input")?;
        let d1_pre = self.decoder[0].forward(z, DECODER[0].4)?;
        let s1 = Activation::Sigmoid.forward(&d1_pre);
        let d2 = self.decoder[1].forward(&s1, DECODER[1].4)?;
        let d3 = self.decoder[2].forward(&d2, DECODER[2].4)?;
        let out = self.decoder[3].forward(&d3, DECODER[3].4)?;
        let cache = DecoderCache {
            inputs: [z.clone(), s1, d2, d3],
            d1_pre,
        };
        Ok((out.into_vec(), cache))
    }

    /// Reconstructed reference, 500 samples.
    pub fn decode(&self, z: &Tensor) -> Result<Vec<f64>> {
        Ok(self.decode_cached(z)?.0)
    }

    /// Accumulates decoder gradients; returns the gradient at the latent.
    pub fn decode_backward(&self, cache: &DecoderCache, upstream: &[f64], grads: &mut DeepMfParams) -> Result<Tensor> {
        let mut g = Tensor::new(1, INPUT_LEN, upstream.to_vec())?;
        for i in (0..4).rev() {
            g = self.decoder[i]
                .accumulate_backward(&cache.inputs[i], &g, &mut grads.decoder[i], true)?
                .expect("input gradient requested");
            if i == 1 {
                g = Activation::Sigmoid.backward(&cache.d1_pre, &g)?;
            }
        }
        Ok(g)
    }

    pub fn classify_cached(&self, z: &Tensor) -> Result<(Vec<f64>, ClassifierCache)> {
        z.expect_shape(HIDDEN_CHANNELS, LATENT_LEN, "classifier input")?;
        let pre = self.classifier_conv.forward(z)?;
        let flat = Activation::Sigmoid.forward(&pre).into_vec();
        let out = self.classifier_linear.forward(&flat)?;
        Ok((
            out,
            ClassifierCache {
                latent: z.clone(),
                pre,
                flat,
            },
        ))
    }

    /// Raw R-peak scores, 500 samples.
    pub fn classify(&self, z: &Tensor) -> Result<Vec<f64>> {
        Ok(self.classify_cached(z)?.0)
    }

    /// Accumulates classifier gradients; returns the gradient at the latent.
    pub fn classify_backward(&self, cache: &ClassifierCache, upstream: &[f64], grads: &mut DeepMfParams) -> Result<Tensor> {
        let g_flat = self
            .classifier_linear
            .accumulate_backward(&cache.flat, upstream, &mut grads.classifier_linear, true)?
            .expect("input gradient requested");
        let g = Tensor::new(HIDDEN_CHANNELS, LATENT_LEN, g_flat)?;
        let g = Activation::Sigmoid.backward(&cache.pre, &g)?;
        Ok(self
            .classifier_conv
            .accumulate_backward(&cache.latent, &g, &mut grads.classifier_conv, true)?
            .expect("input gradient requested"))
    }

    /// Eval-mode scores for one `3 x 500` window.
    pub fn score_window(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.classify(&self.encode(x, Mode::Eval)?)
    }
}
