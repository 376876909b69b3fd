use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{diff_outputs, Invocation, Manifest, OutputSet, MANIFEST_FILE};
use super::{usage, Command, ConfigArgs};
use crate::baselines::detection_constraints;
use crate::config::RunConfig;
use crate::dataset::{
    load_recording, load_recordings, loso_split, save_recording, synthesize, PreparedRecording, Recording,
    MIN_EXPERIMENT_S,
};
use crate::deepmf::{export_kernels_of, fit, infer_prepared, kernel_shift, DeepMfModel, EcgTemplate, EpochLog};
use crate::dsp::find_peaks;
use crate::eval::{
    run_loso_observed, summarize, write_curve_csv, write_metrics_csv, Detector, LosoResult, Quartiles,
};
use crate::stats::pearson;
use crate::{Error, Result};

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth { config, out } => {
            let cfg = config.resolve()?;
            report_manifest(&synth(&cfg, &out)?, &out);
        }
        Command::Train {
            config,
            data,
            held_out,
            no_template_init,
            out,
        } => {
            let cfg = with_template_flag(&config, no_template_init)?;
            let inv = Invocation::Train {
                data: absolute(&data)?,
                held_out,
            };
            report_manifest(&run_invocation(&inv, &cfg, &out)?, &out);
        }
        Command::Infer {
            config,
            model,
            input,
            out,
        } => {
            let cfg = config.resolve()?;
            let inv = Invocation::Infer {
                model: absolute(&model)?,
                input: absolute(&input)?,
            };
            report_manifest(&run_invocation(&inv, &cfg, &out)?, &out);
        }
        Command::Eval {
            config,
            data,
            mode,
            no_template_init,
            out,
        } => {
            let cfg = with_template_flag(&config, no_template_init)?;
            let inv = Invocation::Eval {
                data: absolute(&data)?,
                modes: mode.detectors(),
            };
            report_manifest(&run_invocation(&inv, &cfg, &out)?, &out);
        }
        Command::Kernels { before, after, out } => {
            let inv = Invocation::Kernels {
                before: absolute(&before)?,
                after: absolute(&after)?,
            };
            report_manifest(&run_invocation(&inv, &RunConfig::default(), &out)?, &out);
        }
        Command::Report { eval } => {
            let path = eval.join(SUMMARY_FILE);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
            let summary: EvalSummary = serde_json::from_str(&text)?;
            print!("{}", comparison_table(&summary));
        }
        Command::Rerun { manifest, out, verify } => {
            let recorded = Manifest::load(&manifest)?;
            let fresh = run_invocation(&recorded.invocation, &recorded.config, &out)?;
            let bad = diff_outputs(&recorded, &fresh);
            if verify && !bad.is_empty() {
                return Err(Error::Invariant(format!("re-run outputs differ: {}", bad.join(", "))));
            }
            report_manifest(&fresh, &out);
            if verify {
                eprintln!("verified {} output(s) against {}", fresh.outputs.len(), manifest.display());
            }
        }
    }
    Ok(())
}

fn report_manifest(m: &Manifest, out: &Path) {
    eprintln!(
        "wrote {} file(s) and {} (config {})",
        m.outputs.len(),
        out.join(MANIFEST_FILE).display(),
        &m.config_hash[..12]
    );
}

fn with_template_flag(config: &ConfigArgs, no_template_init: bool) -> Result<RunConfig> {
    let mut cfg = config.resolve()?;
    if no_template_init {
        cfg.template_init = false;
    }
    Ok(cfg)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(p).map_err(|e| Error::Load(format!("{}: {e}", p.display())))
}

/// Runs a recorded (or freshly built) invocation into `out`.
pub(crate) fn run_invocation(inv: &Invocation, cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    match inv {
        Invocation::Synth => synth(cfg, out),
        Invocation::Train { data, held_out } => train(cfg, data, held_out.as_deref(), out),
        Invocation::Infer { model, input } => infer(cfg, model, input, out),
        Invocation::Eval { data, modes } => eval(cfg, data, modes, out),
        Invocation::Kernels { before, after } => kernels(cfg, before, after, out),
    }
}

fn synth(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let recs = synthesize(&cfg.synth())?;
    let mut outputs = OutputSet::create(out)?;
    for r in &recs {
        let csv = save_recording(r, out)?;
        for p in [csv.clone(), crate::dataset::sidecar_path(&csv)] {
            let name = p.file_name().and_then(|n| n.to_str()).expect("recording file names are UTF-8");
            outputs.record(name)?;
        }
    }
    let ids = recs.iter().map(|r| r.subject_id.clone()).collect();
    outputs.finish(Invocation::Synth, cfg, ids)
}

/// Loads every recording of a data directory written by `synth` (or laid
/// out the same way) and prepares it for the model.
fn load_data(dir: &Path) -> Result<Vec<PreparedRecording>> {
    let manifest = dir.join(MANIFEST_FILE);
    if !manifest.exists() {
        return Err(Error::Load(format!("{} has no {MANIFEST_FILE}", dir.display())));
    }
    Manifest::load(&manifest)?;
    let recs = load_recordings(dir)?;
    for r in &recs {
        check_duration(r)?;
    }
    recs.iter().map(PreparedRecording::from_recording).collect()
}

fn check_duration(r: &Recording) -> Result<()> {
    if r.duration_s() < MIN_EXPERIMENT_S {
        return Err(Error::InsufficientData(format!(
            "subject {} has {:.1} s of data; at least {MIN_EXPERIMENT_S} s is required",
            r.subject_id,
            r.duration_s()
        )));
    }
    Ok(())
}

fn log_csv(log: &[EpochLog]) -> Vec<u8> {
    let mut s = String::from("phase,epoch,mean_loss,test_loss\n");
    for e in log {
        let test = e.test_loss.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", e.phase, e.epoch, e.mean_loss, test));
    }
    s.into_bytes()
}

fn train(cfg: &RunConfig, data: &Path, held_out: Option<&str>, out: &Path) -> Result<Manifest> {
    let recs = load_data(data)?;
    let (train, test) = match held_out {
        Some(id) => loso_split(&recs, id)?,
        None => (recs.iter().collect(), Vec::new()),
    };
    if train.is_empty() {
        return Err(Error::InsufficientData("no training subjects".into()));
    }
    let tc = cfg.train();
    let model = fit(&EcgTemplate::builtin(), &tc, &train, &test)?;
    let mut outputs = OutputSet::create(out)?;
    outputs.write("initial.dmf", &model.initial.to_bytes()?)?;
    outputs.write("model.dmf", &model.trained.to_bytes()?)?;
    outputs.write("train_log.csv", &log_csv(&model.log))?;
    let ids = train.iter().map(|r| r.subject_id.clone()).collect();
    let inv = Invocation::Train {
        data: data.to_path_buf(),
        held_out: held_out.map(str::to_string),
    };
    outputs.finish(inv, cfg, ids)
}

fn infer(cfg: &RunConfig, model: &Path, input: &Path, out: &Path) -> Result<Manifest> {
    let model_data = DeepMfModel::load(model)?;
    let rec = load_recording(input)?;
    let prepared = PreparedRecording::from_recording(&rec)?;
    let score = infer_prepared(&prepared, &model_data.params)?;
    let fs = score.fs();
    let mut scores = String::from("t,score\n");
    for (i, v) in score.samples().iter().enumerate() {
        scores.push_str(&format!("{},{}\n", i as f64 / fs, v));
    }
    let peaks = find_peaks(&score, &detection_constraints(cfg.deepmf_threshold));
    let mut peak_rows = String::from("index,t,height\n");
    for (&i, &h) in peaks.indices().iter().zip(peaks.heights()) {
        peak_rows.push_str(&format!("{},{},{}\n", i, i as f64 / fs, h));
    }
    let mut outputs = OutputSet::create(out)?;
    outputs.write("scores.csv", scores.as_bytes())?;
    outputs.write("peaks.csv", peak_rows.as_bytes())?;
    let inv = Invocation::Infer {
        model: model.to_path_buf(),
        input: input.to_path_buf(),
    };
    outputs.finish(inv, cfg, vec![rec.subject_id])
}

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub detector: Detector,
    pub operating_threshold: Option<f64>,
    pub subjects: usize,
    pub recall: Option<Quartiles>,
    pub precision: Option<Quartiles>,
    pub auc: Option<f64>,
    pub failures: Vec<crate::eval::FoldFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub detectors: Vec<DetectorSummary>,
}

fn detector_summary(r: &LosoResult, cfg: &crate::eval::EvalConfig) -> DetectorSummary {
    let s = summarize(&r.metrics).ok();
    DetectorSummary {
        detector: r.detector,
        operating_threshold: r.operating_threshold(cfg),
        subjects: r.metrics.len(),
        recall: s.map(|s| s.recall),
        precision: s.map(|s| s.precision),
        auc: r.pooled.as_ref().map(|c| c.auc),
        failures: r.failures.clone(),
    }
}

fn fmt_q(q: Option<Quartiles>) -> String {
    match q {
        Some(q) => format!("{:.3} [{:.3}, {:.3}]", q.median, q.q1, q.q3),
        None => "-".into(),
    }
}

/// Medians with interquartile ranges, one row per detector.
pub fn comparison_table(s: &EvalSummary) -> String {
    let mut out = format!(
        "{:<8} {:>4}  {:<24} {:<24} {:>6}\n",
        "detector", "n", "recall median [IQR]", "precision median [IQR]", "auc"
    );
    for d in &s.detectors {
        let auc = d.auc.map(|a| format!("{a:.3}")).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<8} {:>4}  {:<24} {:<24} {:>6}\n",
            d.detector.name(),
            d.subjects,
            fmt_q(d.recall),
            fmt_q(d.precision),
            auc
        ));
    }
    out
}

fn comparison_csv(s: &EvalSummary) -> String {
    let mut out = String::from(
        "detector,subjects,recall_median,recall_q1,recall_q3,precision_median,precision_q1,precision_q3,auc\n",
    );
    let q = |q: Option<Quartiles>| match q {
        Some(q) => format!("{},{},{}", q.median, q.q1, q.q3),
        None => ",,".into(),
    };
    for d in &s.detectors {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            d.detector.name(),
            d.subjects,
            q(d.recall),
            q(d.precision),
            d.auc.map(|a| a.to_string()).unwrap_or_default()
        ));
    }
    out
}

fn eval(cfg: &RunConfig, data: &Path, modes: &[Detector], out: &Path) -> Result<Manifest> {
    if modes.is_empty() {
        return Err(usage("no detector selected"));
    }
    let recs = load_data(data)?;
    let ec = cfg.eval();
    let mut outputs = OutputSet::create(out)?;
    let mut summary = EvalSummary { detectors: Vec::new() };
    let mut failed = Vec::new();
    for &d in modes {
        eprintln!("{}: leave-one-subject-out over {} subject(s)", d.name(), recs.len());
        let r = run_loso_observed(&recs, d, &ec, &mut |id, m| match m {
            Ok(m) => eprintln!("  {id}: recall {:.3} precision {:.3}", m.recall, m.precision),
            Err(e) => eprintln!("  {id}: failed: {e}"),
        })?;
        let name = d.name();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &r.metrics)?;
        outputs.write(&format!("metrics_{name}.csv"), &buf)?;
        if let Some(pooled) = &r.pooled {
            let mut buf = Vec::new();
            write_curve_csv(&mut buf, pooled)?;
            outputs.write(&format!("curve_{name}.csv"), &buf)?;
        }
        for (id, c) in &r.curves {
            let mut buf = Vec::new();
            write_curve_csv(&mut buf, c)?;
            outputs.write(&format!("curves/{name}_{id}.csv"), &buf)?;
        }
        for (id, m) in &r.models {
            outputs.write(&format!("models/{id}.dmf"), &m.trained.to_bytes()?)?;
            outputs.write(&format!("logs/{id}.csv"), &log_csv(&m.log))?;
        }
        failed.extend(r.failures.iter().map(|f| format!("{} {}: {}", name, f.subject_id, f.error)));
        summary.detectors.push(detector_summary(&r, &ec));
    }
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    outputs.write(SUMMARY_FILE, json.as_bytes())?;
    outputs.write("comparison.csv", comparison_csv(&summary).as_bytes())?;
    print!("{}", comparison_table(&summary));
    let ids = crate::dataset::subject_ids(&recs);
    let inv = Invocation::Eval {
        data: data.to_path_buf(),
        modes: modes.to_vec(),
    };
    let manifest = outputs.finish(inv, cfg, ids)?;
    if !failed.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} fold(s) failed:\n  {}",
            failed.len(),
            failed.join("\n  ")
        )));
    }
    Ok(manifest)
}

fn kernels(cfg: &RunConfig, before: &Path, after: &Path, out: &Path) -> Result<Manifest> {
    let a = DeepMfModel::load(before)?;
    let b = DeepMfModel::load(after)?;
    if a.params.tensor_layout() != b.params.tensor_layout() {
        return Err(Error::Shape(format!(
            "{} and {} have different layer shapes",
            before.display(),
            after.display()
        )));
    }
    let export = export_kernels_of(&b.params, &a);
    let taps = a.params.encoder[0].kernel_len;
    let mut csv = String::from("kernel_id,out_ch,in_ch,shift,template_initialized,template_corr,corr");
    for prefix in ["before", "after"] {
        for k in 0..taps {
            csv.push_str(&format!(",{prefix}_tap_{k}"));
        }
    }
    csv.push('\n');
    let l1_before = &a.params.encoder[0];
    for (id, k) in export.kernels.iter().enumerate() {
        let initial = l1_before.kernel(k.out_ch, k.in_ch);
        let shift = if k.template_initialized {
            kernel_shift(&a.init.shifts, k.out_ch).to_string()
        } else {
            String::new()
        };
        csv.push_str(&format!(
            "{id},{},{},{shift},{},{},{},{},{}\n",
            k.out_ch,
            k.in_ch,
            k.template_initialized,
            k.template_corr,
            pearson(initial, &k.taps),
            crate::deepmf::join_taps(initial),
            crate::deepmf::join_taps(&k.taps)
        ));
    }
    let mut outputs = OutputSet::create(out)?;
    outputs.write("kernels.csv", csv.as_bytes())?;
    let inv = Invocation::Kernels {
        before: before.to_path_buf(),
        after: after.to_path_buf(),
    };
    outputs.finish(inv, cfg, Vec::new())
}

