//! 1-D convolution and transposed convolution with "same" zero padding.
//!
//! Convolution is cross-correlation (no kernel flip):
//!
//! ```text
//! out[o][t] = bias[o] + sum_i sum_k w[o][i][k] * xpad[i][t * stride + k]
//! ```
//!
//! with output length `ceil(len / stride)` and the padding split evenly, the
//! extra sample going right. The forward pass accumulates in exactly that
//! order (`i` outer, `k` inner), so it is bit-identical to a naive loop.
//! The transposed layer is the adjoint of the convolution it mirrors.

use rand::Rng;

use super::{uniform_fill, Tensor};
use crate::{Error, Result};

/// Accumulator block; sized so the accumulators stay in registers.
const BLOCK: usize = 16;

/// `(out_len, pad_left, pad_right)` for "same" padding.
pub fn same_padding(len: usize, kernel_len: usize, stride: usize) -> (usize, usize, usize) {
    let out_len = len.div_ceil(stride);
    let total = ((out_len - 1) * stride + kernel_len).saturating_sub(len);
    let left = total / 2;
    (out_len, left, total - left)
}

/// One zero-padded input row plus its stride phases.
struct PaddedRow {
    data: Vec<f64>,
    /// `phases[r][m] == data[m * stride + r]`; empty when stride is 1.
    phases: Vec<Vec<f64>>,
}

impl PaddedRow {
    fn new(row: &[f64], left: usize, len: usize, stride: usize) -> Self {
        let mut data = vec![0.0; len];
        let end = (left + row.len()).min(len);
        data[left..end].copy_from_slice(&row[..end - left]);
        let phases = if stride == 1 {
            Vec::new()
        } else {
            (0..stride)
                .map(|r| data.iter().skip(r).step_by(stride).copied().collect())
                .collect()
        };
        Self { data, phases }
    }

    fn phase(&self, r: usize) -> &[f64] {
        if self.phases.is_empty() {
            &self.data
        } else {
            &self.phases[r]
        }
    }
}

fn padded_len(n_out: usize, kernel_len: usize, stride: usize) -> usize {
    let n_out_pad = n_out.div_ceil(BLOCK) * BLOCK;
    (n_out_pad + kernel_len.div_ceil(stride) + 1) * stride + BLOCK
}

/// `out[t] = bias + sum_i sum_k w[i][k] * row_i[t * stride + k]`, accumulated in
/// `(i, k)` order for every `t`.
fn correlate(out: &mut [f64], bias: f64, rows: &[PaddedRow], w: &[f64], kernel_len: usize, stride: usize) {
    let n_out = out.len();
    let mut t0 = 0;
    while t0 < n_out {
        let mut acc = [bias; BLOCK];
        for (i, row) in rows.iter().enumerate() {
            let wi = &w[i * kernel_len..(i + 1) * kernel_len];
            for (k, &wk) in wi.iter().enumerate() {
                let start = t0 + k / stride;
                let src = &row.phase(k % stride)[start..start + BLOCK];
                for j in 0..BLOCK {
                    acc[j] += wk * src[j];
                }
            }
        }
        let take = BLOCK.min(n_out - t0);
        out[t0..t0 + take].copy_from_slice(&acc[..take]);
        t0 += BLOCK;
    }
}

/// `gw[k] += sum_t g[t] * xp[t * stride + k]`.
fn weight_grad(gw: &mut [f64], g: &[f64], xp: &[f64], stride: usize) {
    let kernel_len = gw.len();
    let mut k0 = 0;
    while k0 < kernel_len {
        let mut acc = [0.0; BLOCK];
        for (t, &gt) in g.iter().enumerate() {
            let start = t * stride + k0;
            let src = &xp[start..start + BLOCK];
            for j in 0..BLOCK {
                acc[j] += gt * src[j];
            }
        }
        let take = BLOCK.min(kernel_len - k0);
        for j in 0..take {
            gw[k0 + j] += acc[j];
        }
        k0 += BLOCK;
    }
}

/// `yp[t * stride + k] += a[t] * w[k]`, visiting `t` in ascending order.
fn scatter(yp: &mut [f64], a: &[f64], w: &[f64], stride: usize) {
    for (t, &at) in a.iter().enumerate() {
        let dst = &mut yp[t * stride..t * stride + w.len()];
        for (d, &wk) in dst.iter_mut().zip(w) {
            *d += at * wk;
        }
    }
}

fn check_geometry(in_channels: usize, out_channels: usize, kernel_len: usize, stride: usize) -> Result<()> {
    if in_channels == 0 || out_channels == 0 || kernel_len == 0 || stride == 0 {
        return Err(Error::Shape(format!(
            "invalid layer geometry in={in_channels} out={out_channels} k={kernel_len} stride={stride}"
        )));
    }
    Ok(())
}

/// Gradients of one layer application.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub input: Option<Tensor>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Convolution layer, weights laid out `[out][in][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_len: usize,
    pub stride: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_len: usize,
        stride: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        check_geometry(in_channels, out_channels, kernel_len, stride)?;
        if weight.len() != out_channels * in_channels * kernel_len || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv {in_channels}->{out_channels} k={kernel_len} got {} weights, {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight,
            bias,
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel_len: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight: vec![0.0; out_channels * in_channels * kernel_len],
            bias: vec![0.0; out_channels],
        }
    }

    /// Weights and biases uniform in `±1/sqrt(in_channels * kernel_len)`.
    pub fn init_uniform(
        in_channels: usize,
        out_channels: usize,
        kernel_len: usize,
        stride: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = 1.0 / ((in_channels * kernel_len) as f64).sqrt();
        Self {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight: uniform_fill(rng, out_channels * in_channels * kernel_len, bound),
            bias: uniform_fill(rng, out_channels, bound),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.in_channels, self.out_channels, self.kernel_len, self.stride)
    }

    pub fn kernel(&self, out_ch: usize, in_ch: usize) -> &[f64] {
        let start = (out_ch * self.in_channels + in_ch) * self.kernel_len;
        &self.weight[start..start + self.kernel_len]
    }

    pub fn kernel_mut(&mut self, out_ch: usize, in_ch: usize) -> &mut [f64] {
        let start = (out_ch * self.in_channels + in_ch) * self.kernel_len;
        &mut self.weight[start..start + self.kernel_len]
    }

    /// Number of 1-D kernels, one per (output, input) channel pair.
    pub fn kernel_count(&self) -> usize {
        self.out_channels * self.in_channels
    }

    pub fn out_len(&self, len: usize) -> usize {
        len.div_ceil(self.stride)
    }

    fn padded_rows(&self, x: &Tensor) -> Vec<PaddedRow> {
        let (n_out, left, _) = same_padding(x.len(), self.kernel_len, self.stride);
        let plen = padded_len(n_out, self.kernel_len, self.stride);
        (0..x.channels())
            .map(|i| PaddedRow::new(x.channel(i), left, plen, self.stride))
            .collect()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.channels() != self.in_channels {
            return Err(Error::Shape(format!(
                "conv expects {} input channels, got {}",
                self.in_channels,
                x.channels()
            )));
        }
        let n_out = self.out_len(x.len());
        let rows = self.padded_rows(x);
        let mut out = Tensor::zeros(self.out_channels, n_out);
        let per_out = self.in_channels * self.kernel_len;
        for o in 0..self.out_channels {
            let w = &self.weight[o * per_out..(o + 1) * per_out];
            correlate(out.channel_mut(o), self.bias[o], &rows, w, self.kernel_len, self.stride);
        }
        Ok(out)
    }

    /// Adds this application's parameter gradients into `grad` and returns the
    /// input gradient when `want_input` is set.
    pub fn accumulate_backward(
        &self,
        x: &Tensor,
        upstream: &Tensor,
        grad: &mut Conv1d,
        want_input: bool,
    ) -> Result<Option<Tensor>> {
        let (n_out, left, _) = same_padding(x.len(), self.kernel_len, self.stride);
        x.expect_shape(self.in_channels, x.len(), "conv backward input")?;
        upstream.expect_shape(self.out_channels, n_out, "conv backward upstream")?;
        if grad.weight.len() != self.weight.len() || grad.bias.len() != self.bias.len() {
            return Err(Error::Shape("gradient buffer does not match layer".into()));
        }
        let rows = self.padded_rows(x);
        let k = self.kernel_len;
        for o in 0..self.out_channels {
            let g = upstream.channel(o);
            grad.bias[o] += g.iter().sum::<f64>();
            for (i, row) in rows.iter().enumerate() {
                let start = (o * self.in_channels + i) * k;
                weight_grad(&mut grad.weight[start..start + k], g, &row.data, self.stride);
            }
        }
        if !want_input {
            return Ok(None);
        }
        let plen = (n_out - 1) * self.stride + k;
        let mut gx = Tensor::zeros(self.in_channels, x.len());
        let mut gxp = vec![0.0; plen.max(left + x.len())];
        for i in 0..self.in_channels {
            gxp.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..self.out_channels {
                scatter(&mut gxp, upstream.channel(o), self.kernel(o, i), self.stride);
            }
            gx.channel_mut(i).copy_from_slice(&gxp[left..left + x.len()]);
        }
        Ok(Some(gx))
    }

    pub fn backward(&self, x: &Tensor, upstream: &Tensor) -> Result<ConvGrads> {
        let mut grad = self.zeros_like();
        let input = self.accumulate_backward(x, upstream, &mut grad, true)?;
        Ok(ConvGrads {
            input,
            weight: grad.weight,
            bias: grad.bias,
        })
    }
}

/// Transposed convolution, weights laid out `[in][out][k]`.
///
/// Mirrors a [`Conv1d`] with `in`/`out` swapped; the stride acts as the
/// upsampling factor and the output length is given explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTranspose1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_len: usize,
    pub stride: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvTranspose1d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_len: usize,
        stride: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        check_geometry(in_channels, out_channels, kernel_len, stride)?;
        if weight.len() != out_channels * in_channels * kernel_len || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "tconv {in_channels}->{out_channels} k={kernel_len} got {} weights, {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight,
            bias,
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel_len: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight: vec![0.0; out_channels * in_channels * kernel_len],
            bias: vec![0.0; out_channels],
        }
    }

    /// Weights and biases uniform in `±1/sqrt(in_channels * kernel_len)`.
    pub fn init_uniform(
        in_channels: usize,
        out_channels: usize,
        kernel_len: usize,
        stride: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = 1.0 / ((in_channels * kernel_len) as f64).sqrt();
        Self {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight: uniform_fill(rng, out_channels * in_channels * kernel_len, bound),
            bias: uniform_fill(rng, out_channels, bound),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.in_channels, self.out_channels, self.kernel_len, self.stride)
    }

    pub fn kernel(&self, in_ch: usize, out_ch: usize) -> &[f64] {
        let start = (in_ch * self.out_channels + out_ch) * self.kernel_len;
        &self.weight[start..start + self.kernel_len]
    }

    pub fn kernel_count(&self) -> usize {
        self.out_channels * self.in_channels
    }

    fn geometry(&self, in_len: usize, target_len: usize) -> Result<(usize, usize)> {
        if target_len == 0 || target_len.div_ceil(self.stride) != in_len {
            return Err(Error::Shape(format!(
                "target length {target_len} is not reachable from {in_len} samples at stride {}",
                self.stride
            )));
        }
        let (_, left, _) = same_padding(target_len, self.kernel_len, self.stride);
        let plen = ((in_len - 1) * self.stride + self.kernel_len).max(left + target_len);
        Ok((left, plen))
    }

    pub fn forward(&self, x: &Tensor, target_len: usize) -> Result<Tensor> {
        if x.channels() != self.in_channels {
            return Err(Error::Shape(format!(
                "tconv expects {} input channels, got {}",
                self.in_channels,
                x.channels()
            )));
        }
        let (left, plen) = self.geometry(x.len(), target_len)?;
        let mut out = Tensor::zeros(self.out_channels, target_len);
        let mut yp = vec![0.0; plen];
        for o in 0..self.out_channels {
            yp.iter_mut().for_each(|v| *v = self.bias[o]);
            for i in 0..self.in_channels {
                scatter(&mut yp, x.channel(i), self.kernel(i, o), self.stride);
            }
            out.channel_mut(o).copy_from_slice(&yp[left..left + target_len]);
        }
        Ok(out)
    }

    pub fn accumulate_backward(
        &self,
        x: &Tensor,
        upstream: &Tensor,
        grad: &mut ConvTranspose1d,
        want_input: bool,
    ) -> Result<Option<Tensor>> {
        x.expect_shape(self.in_channels, x.len(), "tconv backward input")?;
        let target_len = upstream.len();
        upstream.expect_shape(self.out_channels, target_len, "tconv backward upstream")?;
        let (left, _) = self.geometry(x.len(), target_len)?;
        if grad.weight.len() != self.weight.len() || grad.bias.len() != self.bias.len() {
            return Err(Error::Shape("gradient buffer does not match layer".into()));
        }
        let n_in = x.len();
        let plen = padded_len(n_in, self.kernel_len, self.stride).max(left + target_len);
        let rows: Vec<PaddedRow> = (0..self.out_channels)
            .map(|o| PaddedRow::new(upstream.channel(o), left, plen, self.stride))
            .collect();
        let k = self.kernel_len;
        for o in 0..self.out_channels {
            grad.bias[o] += upstream.channel(o).iter().sum::<f64>();
        }
        for i in 0..self.in_channels {
            for (o, row) in rows.iter().enumerate() {
                let start = (i * self.out_channels + o) * k;
                weight_grad(&mut grad.weight[start..start + k], x.channel(i), &row.data, self.stride);
            }
        }
        if !want_input {
            return Ok(None);
        }
        let mut gx = Tensor::zeros(self.in_channels, n_in);
        let per_in = self.out_channels * k;
        for i in 0..self.in_channels {
            let w = &self.weight[i * per_in..(i + 1) * per_in];
            correlate(gx.channel_mut(i), 0.0, &rows, w, k, self.stride);
        }
        Ok(Some(gx))
    }

    pub fn backward(&self, x: &Tensor, upstream: &Tensor) -> Result<ConvGrads> {
        let mut grad = self.zeros_like();
        let input = self.accumulate_backward(x, upstream, &mut grad, true)?;
        Ok(ConvGrads {
            input,
            weight: grad.weight,
            bias: grad.bias,
        })
    }
}
