use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn deepmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepmf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = deepmf(args);
    assert!(o.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every regular file under `dir` keyed by relative path.
fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

const FAST: [&str; 6] = ["--set", "fs=250", "--set", "n_subjects=2", "--set", "duration_s=120"];

/// A two-subject corpus shared by the tests below.
fn corpus() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("data");
        let mut args = vec!["synth", "--out", s(&out)];
        args.extend(FAST);
        ok(&args);
        dir
    })
    .path()
}

fn train(out: &Path, extra: &[&str]) {
    let data = corpus().join("data");
    let mut args = vec!["train", "--data", s(&data), "--held-out", "s02", "--out", s(out), "--set", "segment_hop=500"];
    args.extend(extra);
    ok(&args);
}

#[test]
fn synth_writes_recordings_and_manifest() {
    let data = corpus().join("data");
    let f = files(&data);
    for name in ["s01.csv", "s01.json", "s02.csv", "s02.json", "manifest.json"] {
        assert!(f.contains_key(Path::new(name)), "missing {name}");
    }
    let m: serde_json::Value = serde_json::from_slice(&f[Path::new("manifest.json")]).unwrap();
    assert_eq!(m["subjects"], serde_json::json!(["s01", "s02"]));
    assert_eq!(m["invocation"]["command"], "synth");

    let again = tempfile::tempdir().unwrap();
    let mut args = vec!["synth", "--out", s(again.path())];
    args.extend(FAST);
    ok(&args);
    assert_eq!(files(again.path()), f);
}

#[test]
fn empty_corpus_is_fine() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", s(dir.path()), "--set", "n_subjects=0"]);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subjects"], serde_json::json!([]));
}

#[test]
fn default_corpus_has_the_full_cohort() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", s(dir.path()), "--set", "duration_s=1"]);
    let csvs = files(dir.path()).keys().filter(|p| p.extension().is_some_and(|e| e == "csv")).count();
    assert_eq!(csvs, 36);
}

#[test]
fn train_is_reproducible_and_logs_both_phases() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&a, &[]);
    train(&b, &[]);
    assert_eq!(std::fs::read(a.join("model.dmf")).unwrap(), std::fs::read(b.join("model.dmf")).unwrap());

    let log = std::fs::read_to_string(a.join("train_log.csv")).unwrap();
    let phases: Vec<&str> = log.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(phases.iter().filter(|p| **p == "encdec").count(), 10);
    assert_eq!(phases.iter().filter(|p| **p == "classifier").count(), 15);

    let same = dir.path().join("same");
    ok(&["kernels", "--before", s(&a.join("model.dmf")), "--after", s(&a.join("model.dmf")), "--out", s(&same)]);
    let csv = std::fs::read_to_string(same.join("kernels.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let corr = header.iter().position(|h| *h == "corr").unwrap();
    assert_eq!(&header[..3], ["kernel_id", "out_ch", "in_ch"]);
    assert!(header.contains(&"before_tap_199") && header.contains(&"after_tap_199"));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| (r[corr].parse::<f64>().unwrap() - 1.0).abs() < 1e-12));

    let rerun = dir.path().join("rerun");
    ok(&["rerun", s(&a.join("manifest.json")), "--out", s(&rerun), "--verify"]);
    assert_eq!(files(&rerun), files(&a));
}

#[test]
fn random_init_trains_from_random_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    train(&out, &["--no-template-init", "--set", "enc_dec_epochs=1", "--set", "classifier_epochs=1"]);
    let k = dir.path().join("k");
    ok(&["kernels", "--before", s(&out.join("initial.dmf")), "--after", s(&out.join("model.dmf")), "--out", s(&k)]);
    let csv = std::fs::read_to_string(k.join("kernels.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let flag = header.iter().position(|h| *h == "template_initialized").unwrap();
    let tcorr = header.iter().position(|h| *h == "template_corr").unwrap();
    for row in csv.lines().skip(1) {
        let r: Vec<&str> = row.split(',').collect();
        assert_eq!(r[flag], "false");
        assert!(r[tcorr].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn baseline_eval_reports_operating_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let o = ok(&["eval", "--data", s(&corpus().join("data")), "--mode", "mf", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("mf"));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let d = &summary["detectors"][0];
    assert_eq!(d["detector"], "mf");
    assert_eq!(d["operating_threshold"], 0.9);
    assert_eq!(d["subjects"], 2);
    ok(&["report", "--eval", s(&out)]);
}

#[test]
fn bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = deepmf(&["synth", "--out", s(dir.path()), "--set", "n_subject=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_subject"));
    assert_eq!(deepmf(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(deepmf(&["synth", "--out", s(dir.path()), "--colour"]).status.code(), Some(1));
    assert_eq!(deepmf(&["--help"]).status.code(), Some(0));
    let missing = dir.path().join("nothing-here");
    assert_eq!(deepmf(&["eval", "--data", s(&missing), "--out", s(dir.path())]).status.code(), Some(2));
}
