//! Deep matched filter (Deep-MF) R-peak detection for low-SNR wearable ECG.
//!
//! The crate is organised bottom-up:
//!
//! - [`dsp`]: Butterworth design, zero-phase filtering, decimation, Hilbert
//!   envelope and constrained peak finding.
//! - [`nn`]: a small reverse-mode engine for the layer types the network uses.
//! - [`deepmf`]: encoder / decoder / R-peak classifier, template
//!   initialisation, two-phase training and rolling-window inference.
//! - [`baselines`]: the standard matched filter and the matched filter with
//!   Hilbert envelope and RR plausibility rules.
//! - [`dataset`]: recording I/O, synthetic ear-ECG, windowing and
//!   leave-one-subject-out splits.
//! - [`eval`]: peak matching, precision/recall sweeps, AUC and reporting.
//! - [`cli`]: the `deepmf` command-line front end.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod deepmf;
pub mod dsp;
pub mod eval;
pub mod nn;
pub mod seeds;
pub mod stats;

mod error;

pub use error::{Error, Result};
