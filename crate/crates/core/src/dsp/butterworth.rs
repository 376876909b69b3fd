//! Butterworth IIR design as cascaded second-order sections.
//!
//! Design goes through the analog prototype in zero/pole/gain form, the
//! standard low-pass to {low, high, band}-pass transforms and a pre-warped
//! bilinear transform, so the digital magnitude at every cutoff is exactly
//! `1/sqrt(2)` for a single pass.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::{Error, Result};

/// Highest prototype order accepted. Larger orders lose accuracy in f64.
pub const MAX_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterBand {
    LowPass { cutoff_hz: f64 },
    HighPass { cutoff_hz: f64 },
    BandPass { low_hz: f64, high_hz: f64 },
}

/// Filter family parameters. `order` is the prototype order of a single
/// pass; a band-pass of order `n` has `2n` poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub band: FilterBand,
    pub order: usize,
}

impl FilterSpec {
    pub fn low_pass(cutoff_hz: f64, order: usize) -> Self {
        Self {
            band: FilterBand::LowPass { cutoff_hz },
            order,
        }
    }

    pub fn high_pass(cutoff_hz: f64, order: usize) -> Self {
        Self {
            band: FilterBand::HighPass { cutoff_hz },
            order,
        }
    }

    pub fn band_pass(low_hz: f64, high_hz: f64, order: usize) -> Self {
        Self {
            band: FilterBand::BandPass { low_hz, high_hz },
            order,
        }
    }

    fn validate(&self, fs: f64) -> Result<()> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSpec(format!("sampling rate {fs} is not positive")));
        }
        if self.order == 0 {
            return Err(Error::InvalidSpec("order must be at least 1".into()));
        }
        if self.order > MAX_ORDER {
            return Err(Error::InvalidSpec(format!(
                "order {} exceeds the supported maximum of {MAX_ORDER}",
                self.order
            )));
        }
        let nyquist = fs / 2.0;
        let check = |f: f64| -> Result<()> {
            if !(f.is_finite() && f > 0.0 && f < nyquist) {
                return Err(Error::InvalidSpec(format!(
                    "cutoff {f} Hz must lie strictly between 0 and fs/2 = {nyquist} Hz"
                )));
            }
            Ok(())
        };
        match self.band {
            FilterBand::LowPass { cutoff_hz } | FilterBand::HighPass { cutoff_hz } => {
                check(cutoff_hz)
            }
            FilterBand::BandPass { low_hz, high_hz } => {
                check(low_hz)?;
                check(high_hz)?;
                if low_hz >= high_hz {
                    return Err(Error::InvalidSpec(format!(
                        "band-pass needs low < high, got {low_hz} >= {high_hz}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// One direct-form II transposed biquad, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub const IDENTITY: Biquad = Biquad {
        b: [1.0, 0.0, 0.0],
        a: [1.0, 0.0, 0.0],
    };

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Steady-state DF-II-T state for a unit step input.
    pub(crate) fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z1 = b2 - a2 * gain;
        let z0 = b1 - a1 * gain + z1;
        [z0, z1]
    }

    pub(crate) fn dc_gain(&self) -> f64 {
        (self.b.iter().sum::<f64>()) / (self.a.iter().sum::<f64>())
    }
}

/// A cascade of biquads plus the total filter order (pole count).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    sections: Vec<Biquad>,
    order: usize,
}

impl FilterCoefficients {
    /// The all-pass `b = [1], a = [1]`.
    pub fn identity() -> Self {
        Self {
            sections: vec![Biquad::IDENTITY],
            order: 0,
        }
    }

    pub fn from_sections(sections: Vec<Biquad>, order: usize) -> Self {
        Self { sections, order }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Number of poles of the cascade.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Complex single-pass response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, fs: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / fs;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        self.response(freq_hz, fs).norm()
    }

    /// Poles of every section; all lie inside the unit circle for a stable design.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for s in &self.sections {
            let [_, a1, a2] = s.a;
            if a2 == 0.0 {
                if a1 != 0.0 {
                    out.push(Complex64::new(-a1, 0.0));
                }
                continue;
            }
            let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
            out.push((-a1 + disc) / 2.0);
            out.push((-a1 - disc) / 2.0);
        }
        out
    }
}

struct Zpk {
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    gain: f64,
}

fn prototype(order: usize) -> Zpk {
    let n = order as i64;
    let poles = (-n + 1..n)
        .step_by(2)
        .map(|m| -Complex64::from_polar(1.0, PI * m as f64 / (2.0 * n as f64)))
        .collect();
    Zpk {
        zeros: Vec::new(),
        poles,
        gain: 1.0,
    }
}

fn lp_to_lp(p: Zpk, wo: f64) -> Zpk {
    let degree = (p.poles.len() - p.zeros.len()) as i32;
    Zpk {
        zeros: p.zeros.iter().map(|z| z * wo).collect(),
        poles: p.poles.iter().map(|q| q * wo).collect(),
        gain: p.gain * wo.powi(degree),
    }
}

fn lp_to_hp(p: Zpk, wo: f64) -> Zpk {
    let degree = p.poles.len() - p.zeros.len();
    let prod_z: Complex64 = p.zeros.iter().map(|z| -z).product();
    let prod_p: Complex64 = p.poles.iter().map(|q| -q).product();
    let mut zeros: Vec<Complex64> = p.zeros.iter().map(|z| wo / z).collect();
    zeros.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), degree));
    Zpk {
        zeros,
        poles: p.poles.iter().map(|q| wo / q).collect(),
        gain: p.gain * (prod_z / prod_p).re,
    }
}

fn lp_to_bp(p: Zpk, wo: f64, bw: f64) -> Zpk {
    let degree = p.poles.len() - p.zeros.len();
    let split = |pts: &[Complex64]| -> Vec<Complex64> {
        let scaled: Vec<Complex64> = pts.iter().map(|x| x * bw / 2.0).collect();
        let mut out = Vec::with_capacity(2 * scaled.len());
        for s in &scaled {
            out.push(s + (s * s - wo * wo).sqrt());
        }
        for s in &scaled {
            out.push(s - (s * s - wo * wo).sqrt());
        }
        out
    };
    let mut zeros = split(&p.zeros);
    zeros.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), degree));
    Zpk {
        zeros,
        poles: split(&p.poles),
        gain: p.gain * bw.powi(degree as i32),
    }
}

fn bilinear(p: Zpk, fs: f64) -> Zpk {
    let fs2 = 2.0 * fs;
    let degree = p.poles.len() - p.zeros.len();
    let map = |x: &Complex64| (fs2 + x) / (fs2 - x);
    let prod_z: Complex64 = p.zeros.iter().map(|z| fs2 - z).product();
    let prod_p: Complex64 = p.poles.iter().map(|q| fs2 - q).product();
    let mut zeros: Vec<Complex64> = p.zeros.iter().map(map).collect();
    zeros.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), degree));
    Zpk {
        zeros,
        poles: p.poles.iter().map(map).collect(),
        gain: p.gain * (prod_z / prod_p).re,
    }
}

const IMAG_EPS: f64 = 1e-12;

/// Pairs conjugate poles into quadratic factors `[1, c1, c2]`; real poles are
/// paired with each other and a leftover real pole yields a first-order factor.
fn pole_factors(poles: &[Complex64]) -> Vec<[f64; 3]> {
    let mut complex: Vec<Complex64> = poles
        .iter()
        .filter(|p| p.im > IMAG_EPS)
        .copied()
        .collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= IMAG_EPS)
        .map(|p| p.re)
        .collect();
    // Poles nearest the unit circle last, matching the usual SOS ordering.
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out: Vec<[f64; 3]> = real
        .chunks(2)
        .map(|c| match c {
            [r1, r2] => [1.0, -(r1 + r2), r1 * r2],
            [r] => [1.0, -r, 0.0],
            _ => unreachable!(),
        })
        .collect();
    out.extend(complex.iter().map(|p| [1.0, -2.0 * p.re, p.norm_sqr()]));
    out
}

fn zero_factors(zeros: &[Complex64], n_sections: usize) -> Vec<[f64; 3]> {
    // Butterworth digital zeros are all real (+1 or -1). Outer pairing of the
    // sorted list gives band-pass sections one zero at each end of the band.
    let mut real: Vec<f64> = zeros.iter().map(|z| z.re).collect();
    real.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::with_capacity(n_sections);
    let (mut lo, mut hi) = (0usize, real.len());
    while lo < hi {
        if hi - lo >= 2 {
            let (z1, z2) = (real[lo], real[hi - 1]);
            out.push([1.0, -(z1 + z2), z1 * z2]);
            lo += 1;
            hi -= 1;
        } else {
            out.push([1.0, -real[lo], 0.0]);
            lo += 1;
        }
    }
    out.resize(n_sections, [1.0, 0.0, 0.0]);
    out
}

/// Designs a digital Butterworth filter as second-order sections.
pub fn design_butterworth(spec: &FilterSpec, fs: f64) -> Result<FilterCoefficients> {
    spec.validate(fs)?;
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let analog = prototype(spec.order);
    let analog = match spec.band {
        FilterBand::LowPass { cutoff_hz } => lp_to_lp(analog, warp(cutoff_hz)),
        FilterBand::HighPass { cutoff_hz } => lp_to_hp(analog, warp(cutoff_hz)),
        FilterBand::BandPass { low_hz, high_hz } => {
            let (w1, w2) = (warp(low_hz), warp(high_hz));
            lp_to_bp(analog, (w1 * w2).sqrt(), w2 - w1)
        }
    };
    let digital = bilinear(analog, fs);
    let order = digital.poles.len();

    let dens = pole_factors(&digital.poles);
    let nums = zero_factors(&digital.zeros, dens.len());
    let n = dens.len();
    let per_section = digital.gain.abs().powf(1.0 / n as f64);
    let sign = digital.gain.signum();
    let sections = nums
        .into_iter()
        .zip(dens)
        .enumerate()
        .map(|(i, (b, a))| {
            let g = if i == 0 { per_section * sign } else { per_section };
            Biquad {
                b: [b[0] * g, b[1] * g, b[2] * g],
                a,
            }
        })
        .collect();
    Ok(FilterCoefficients { sections, order })
}
