//! The `deepmf` command line.
//!
//! Every command that writes files writes them under `--out DIR` together
//! with a `manifest.json`; `deepmf rerun` replays a manifest.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical failure or a failed re-run verification.

mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::execute;
pub use manifest::{Invocation, Manifest, OutputSet};

use crate::config::RunConfig;
use crate::eval::Detector;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "deepmf", version, about = "R-peak detection in ear-ECG with a deep matched filter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set n_subjects=6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Root seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    DeepMf,
    Mf,
    MfHt,
    All,
}

impl Mode {
    pub fn detectors(self) -> Vec<Detector> {
        match self {
            Mode::DeepMf => vec![Detector::DeepMf],
            Mode::Mf => vec![Detector::Mf],
            Mode::MfHt => vec![Detector::MfHt],
            Mode::All => Detector::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic ear/reference ECG corpus.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train both phases on every subject except the held-out one.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        held_out: Option<String>,
        /// Start every kernel from random weights.
        #[arg(long)]
        no_template_init: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one recording with a trained model.
    Infer {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        /// Recording CSV (with its JSON sidecar).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-subject-out evaluation.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        mode: Mode,
        /// Start every kernel from random weights.
        #[arg(long)]
        no_template_init: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare first-layer kernels of two models.
    Kernels {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the detector comparison table of an `eval` output directory.
    Report {
        #[arg(long)]
        eval: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fail unless every output matches the recorded hashes.
        #[arg(long)]
        verify: bool,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
