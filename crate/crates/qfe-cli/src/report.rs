//! Deterministic report assembly and emission.
//!
//! Identical config + seed must produce byte-identical files, so nothing
//! volatile (timing, hostnames, paths) belongs in here; wall time goes to
//! stderr in main.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use qfe::evolve::GeneratorSet;
use qfe::models::landau_zener::GammaScan;
use qfe::qfi::PrecisionReport;
use qfe::spin;

use crate::config::ExperimentConfig;

/// Projection of one generator onto the spin axes, plus whatever is left.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorCoefficients {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrecisionOutput {
    pub variances: BTreeMap<String, f64>,
    pub cost: f64,
    pub saturation_residual: f64,
    pub saturable: bool,
    pub qfi: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_coefficients: Option<BTreeMap<String, GeneratorCoefficients>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeedbackOutput {
    pub omega_variance: f64,
    pub field_variance: f64,
    pub rounds: u64,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanOutput {
    pub gammas: Vec<f64>,
    pub costs: Vec<f64>,
    pub fishers: Vec<[f64; 3]>,
    pub saturation_residuals: Vec<f64>,
    pub argmin_gamma: f64,
    pub argmin_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOutput {
    pub gamma_star: f64,
    pub cost_star: f64,
    pub scan: ScanOutput,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunResult {
    Precision(PrecisionOutput),
    Feedback(FeedbackOutput),
    Scan(ScanOutput),
    Optimize(OptimizeOutput),
}

/// The complete emitted report: config echo, result, numerics actually used.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub result: RunResult,
    pub numerics_used: NumericsUsed,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericsUsed {
    pub steps_per_unit: f64,
    pub total_steps: Option<u64>,
    pub quad_tol: f64,
    pub seed: u64,
}

pub fn precision_output(
    report: &PrecisionReport,
    params: &[String],
    gens: Option<&GeneratorSet>,
) -> PrecisionOutput {
    let n = report.qfi.n();
    let mut variances = BTreeMap::new();
    for (k, name) in params.iter().enumerate() {
        variances.insert(name.clone(), report.variances[k]);
    }
    let qfi = (0..n)
        .map(|a| (0..n).map(|b| report.qfi.get(a, b)).collect())
        .collect();
    let generator_coefficients = gens.map(|g| {
        let ops = spin::spin1();
        let mut map = BTreeMap::new();
        for (k, name) in g.params.iter().enumerate() {
            let m = &g.matrices[k];
            let jx = m.matmul(&ops.jx).trace().re / 2.0;
            let jy = m.matmul(&ops.jy).trace().re / 2.0;
            let jz = m.matmul(&ops.jz).trace().re / 2.0;
            let recon = &(&ops.jx.scale_re(jx) + &ops.jy.scale_re(jy)) + &ops.jz.scale_re(jz);
            map.insert(
                name.clone(),
                GeneratorCoefficients {
                    jx,
                    jy,
                    jz,
                    residual: m.max_diff(&recon),
                },
            );
        }
        map
    });
    PrecisionOutput {
        variances,
        cost: report.cost,
        saturation_residual: report.saturation_residual,
        saturable: report.saturable,
        qfi,
        generator_coefficients,
    }
}

pub fn scan_output(scan: &GammaScan) -> ScanOutput {
    ScanOutput {
        gammas: scan.gammas.clone(),
        costs: scan.costs.clone(),
        fishers: scan.fishers.clone(),
        saturation_residuals: scan.residuals.clone(),
        argmin_gamma: scan.argmin.0,
        argmin_cost: scan.argmin.1,
    }
}

/// Scan rows as CSV, full-precision scientific notation.
pub fn scan_csv(scan: &ScanOutput) -> String {
    let mut out = String::from("gamma,cost,F_GG,F_xx,F_Gx,saturation_residual\n");
    for i in 0..scan.gammas.len() {
        let [f_gg, f_xx, f_gx] = scan.fishers[i];
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e}\n",
            scan.gammas[i], scan.costs[i], f_gg, f_xx, f_gx, scan.saturation_residuals[i]
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Renders the report in the requested format. CSV is defined for scans only.
pub fn render(report: &RunReport, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(report).context("serializing report")?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => match &report.result {
            RunResult::Scan(scan) => Ok(scan_csv(scan)),
            RunResult::Optimize(opt) => Ok(scan_csv(&opt.scan)),
            _ => bail!("CSV output is defined for scan results only; use --format json"),
        },
    }
}

/// Writes atomically: temp file in the target directory, then rename.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            print!("{text}");
            std::io::stdout().flush()?;
        }
        Some(path) => {
            let tmp = path.with_extension("tmp");
            {
                let mut f = std::fs::File::create(&tmp)
                    .with_context(|| format!("creating {}", tmp.display()))?;
                f.write_all(text.as_bytes())?;
                f.sync_all()?;
            }
            std::fs::rename(&tmp, path)
                .with_context(|| format!("renaming into {}", path.display()))?;
        }
    }
    Ok(())
}
