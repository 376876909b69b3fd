//! First-layer kernel export for interpretability.

use std::io::Write;
use std::path::Path;

use super::model::DeepMfParams;
use super::store::DeepMfModel;
use crate::stats::pearson;
use crate::Result;

/// One L1 kernel compared with its aligned initial template.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInfo {
    pub out_ch: usize,
    pub in_ch: usize,
    pub taps: Vec<f64>,
    /// Template shift this kernel is compared against.
    pub shift: i64,
    /// Whether the kernel started as that shifted template.
    pub template_initialized: bool,
    pub template_corr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelExport {
    pub kernels: Vec<KernelInfo>,
    pub template: Vec<f64>,
}

impl KernelExport {
    /// Mean template correlation of the template-initialised kernels.
    pub fn mean_initialized_corr(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .kernels
            .iter()
            .filter(|k| k.template_initialized)
            .map(|k| k.template_corr)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Largest absolute template correlation among kernels that never held a template.
    pub fn max_uninitialized_abs_corr(&self) -> Option<f64> {
        self.kernels
            .iter()
            .filter(|k| !k.template_initialized)
            .map(|k| k.template_corr.abs())
            .reduce(f64::max)
    }

    /// `out_ch,in_ch,tap_0..tap_199`, one row per kernel plus the template as `-1,-1`.
    pub fn write_kernels_csv(&self, w: &mut impl Write) -> Result<()> {
        let taps = self.template.len();
        let header: Vec<String> = ["out_ch".to_string(), "in_ch".to_string()]
            .into_iter()
            .chain((0..taps).map(|k| format!("tap_{k}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for k in &self.kernels {
            writeln!(w, "{},{},{}", k.out_ch, k.in_ch, join_taps(&k.taps))?;
        }
        writeln!(w, "-1,-1,{}", join_taps(&self.template))?;
        Ok(())
    }

    /// `out_ch,in_ch,shift,template_initialized,corr`.
    pub fn write_correlations_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "out_ch,in_ch,shift,template_initialized,corr")?;
        for k in &self.kernels {
            writeln!(w, "{},{},{},{},{}", k.out_ch, k.in_ch, k.shift, k.template_initialized, k.template_corr)?;
        }
        Ok(())
    }

    pub fn save(&self, kernels_csv: &Path, correlations_csv: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_kernels_csv(&mut buf)?;
        std::fs::write(kernels_csv, buf)?;
        let mut buf = Vec::new();
        self.write_correlations_csv(&mut buf)?;
        std::fs::write(correlations_csv, buf)?;
        Ok(())
    }
}

/// Comma-joined taps.
pub fn join_taps(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Template shift paired with L1 output channel `o`; channels beyond the
/// configured shifts compare against the unshifted template.
pub fn kernel_shift(shifts: &[i64], o: usize) -> i64 {
    shifts.get(o).copied().unwrap_or(0)
}

/// Every L1 kernel with its correlation against the aligned template of `model`.
pub fn export_kernels(model: &DeepMfModel) -> KernelExport {
    export_kernels_of(&model.params, model)
}

/// As [`export_kernels`], for `params` measured against the template and
/// shifts recorded in `reference`.
pub fn export_kernels_of(params: &DeepMfParams, reference: &DeepMfModel) -> KernelExport {
    let l1 = &params.encoder[0];
    let shifts = &reference.init.shifts;
    let mut kernels = Vec::new();
    for o in 0..l1.out_channels {
        let shift = kernel_shift(shifts, o);
        let aligned = reference.template.shifted(shift);
        for i in 0..l1.in_channels {
            let taps = l1.kernel(o, i).to_vec();
            kernels.push(KernelInfo {
                out_ch: o,
                in_ch: i,
                template_corr: pearson(&taps, &aligned),
                taps,
                shift,
                template_initialized: reference.init.template_init && i == 0 && o < shifts.len(),
            });
        }
    }
    KernelExport {
        kernels,
        template: reference.template.samples().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deepmf::{EcgTemplate, InitSpec};

    #[test]
    fn fresh_template_kernels_correlate_perfectly() {
        let m = DeepMfModel::init(EcgTemplate::builtin(), InitSpec::default()).unwrap();
        let e = export_kernels(&m);
        assert_eq!(e.kernels.len(), 18);
        for k in e.kernels.iter().filter(|k| k.template_initialized) {
            assert!((k.template_corr - 1.0).abs() < 1e-12);
        }
        assert_eq!(e.kernels.iter().filter(|k| k.template_initialized).count(), 6);
        let mut csv = Vec::new();
        e.write_kernels_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 18 + 1);
        assert!(text.starts_with("out_ch,in_ch,tap_0,"));
        assert!(text.lines().next().unwrap().ends_with(",tap_199"));
        assert!(text.lines().last().unwrap().starts_with("-1,-1,"));
    }
}
