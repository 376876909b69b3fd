//! Recording files: `<name>.csv` with header `t,ear,ref` and a JSON sidecar
//! `<name>.json` holding `{"subject_id": ..., "fs": ...}`.
//!
//! Rows are numbered from 1 after the header in error messages. Values are
//! written in shortest round-trip form, so save/load is bitwise lossless.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Recording;
use crate::dsp::SignalTrace;
use crate::{Error, Result};

/// Allowed relative deviation of any timestamp step from `1/fs`.
const TIMESTAMP_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingMeta {
    pub subject_id: String,
    pub fs: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn parse_field(field: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Load(format!("row {row}: column `{column}` is not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::Load(format!("row {row}: column `{column}` is not finite ({field})")));
    }
    Ok(v)
}

pub fn load_recording(path: &Path) -> Result<Recording> {
    let meta_path = sidecar_path(path);
    let meta: RecordingMeta = serde_json::from_reader(
        File::open(&meta_path).map_err(|e| Error::Load(format!("{}: {e}", meta_path.display())))?,
    )
    .map_err(|e| Error::Load(format!("{}: {e}", meta_path.display())))?;
    if !(meta.fs.is_finite() && meta.fs > 0.0) {
        return Err(Error::Load(format!("{}: invalid fs {}", meta_path.display(), meta.fs)));
    }

    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["t", "ear", "ref"] {
        return Err(Error::Load(format!(
            "{}: expected header `t,ear,ref`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let step = 1.0 / meta.fs;
    let (mut ear, mut reference) = (Vec::new(), Vec::new());
    let mut prev_t: Option<f64> = None;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Load(format!("row {row}: {e}")))?;
        if record.len() != 3 {
            return Err(Error::Load(format!("row {row}: expected 3 fields, found {}", record.len())));
        }
        let t = parse_field(&record[0], row, "t")?;
        ear.push(parse_field(&record[1], row, "ear")?);
        reference.push(parse_field(&record[2], row, "ref")?);
        if let Some(p) = prev_t {
            if ((t - p) - step).abs() > TIMESTAMP_TOLERANCE * step {
                return Err(Error::Load(format!(
                    "row {row}: timestamp step {} does not match fs {}",
                    t - p,
                    meta.fs
                )));
            }
        }
        prev_t = Some(t);
    }
    if ear.is_empty() {
        return Err(Error::Load(format!("{}: no samples", path.display())));
    }
    Recording::new(
        meta.subject_id,
        SignalTrace::new(ear, meta.fs)?,
        SignalTrace::new(reference, meta.fs)?,
    )
}

/// Writes `<dir>/<subject_id>.csv` and its sidecar; returns the CSV path.
pub fn save_recording(rec: &Recording, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", rec.subject_id));
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "t,ear,ref")?;
    let fs = rec.fs();
    for (i, (e, r)) in rec.ear.samples().iter().zip(rec.reference.samples()).enumerate() {
        writeln!(w, "{},{},{}", i as f64 / fs, e, r)?;
    }
    w.flush()?;
    let meta = RecordingMeta {
        subject_id: rec.subject_id.clone(),
        fs,
    };
    std::fs::write(sidecar_path(&path), serde_json::to_string_pretty(&meta)?)?;
    Ok(path)
}

/// Loads every `*.csv` with a sidecar in `dir`, sorted by subject id.
pub fn load_recordings(dir: &Path) -> Result<Vec<Recording>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Load(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && sidecar_path(p).exists())
        .collect();
    paths.sort();
    let mut recs = paths.iter().map(|p| load_recording(p)).collect::<Result<Vec<_>>>()?;
    recs.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(recs)
}
