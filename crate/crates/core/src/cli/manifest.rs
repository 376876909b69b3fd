//! Run manifests: the effective configuration, the invocation and a hash of
//! every file written, enough to re-run and verify a command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::eval::Detector;
use crate::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// A subcommand with its inputs, as recorded for re-runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    Synth,
    Train { data: PathBuf, held_out: Option<String> },
    Infer { model: PathBuf, input: PathBuf },
    Eval { data: PathBuf, modes: Vec<Detector> },
    Kernels { before: PathBuf, after: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub invocation: Invocation,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub subjects: Vec<String>,
    /// Output path (relative to the manifest) to hex SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::Load(format!(
                "{}: manifest version {} is not supported",
                path.display(),
                m.format_version
            )));
        }
        m.config.validate()?;
        if m.config.hash() != m.config_hash {
            return Err(Error::Load(format!("{}: config hash does not match its config", path.display())));
        }
        Ok(m)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files under one directory and records their hashes.
#[derive(Debug)]
pub struct OutputSet {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutputSet {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.hashes.insert(rel.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    /// Records a file some other writer already produced under the root.
    pub fn record(&mut self, rel: &str) -> Result<()> {
        let bytes = std::fs::read(self.root.join(rel))?;
        self.hashes.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self, invocation: Invocation, config: &RunConfig, subjects: Vec<String>) -> Result<Manifest> {
        let manifest = Manifest {
            format_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            invocation,
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
            subjects,
            outputs: self.hashes,
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        std::fs::write(self.root.join(MANIFEST_FILE), json)?;
        Ok(manifest)
    }
}

/// Names of recorded outputs whose hashes differ between two manifests.
pub fn diff_outputs(expected: &Manifest, actual: &Manifest) -> Vec<String> {
    let mut bad: Vec<String> = expected
        .outputs
        .iter()
        .filter(|(k, v)| actual.outputs.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    bad.extend(actual.outputs.keys().filter(|k| !expected.outputs.contains_key(*k)).cloned());
    bad
}
