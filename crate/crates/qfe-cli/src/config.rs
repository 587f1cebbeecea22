//! Experiment configuration: JSON file plus flat flag overrides.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    RotatingField,
    LandauZener,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Optimal,
    Uncontrolled,
    Practical,
    Feedback,
    Scan,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Propagation substeps per unit time.
    pub steps_per_unit: f64,
    /// Absolute tolerance of the kernel quadratures.
    pub quad_tol: f64,
    /// γ-interval width at which the optimizer stops refining.
    pub gamma_tol: f64,
    /// Monte-Carlo key.
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            steps_per_unit: qfe::evolve::DEFAULT_STEPS_PER_UNIT,
            quad_tol: qfe::models::landau_zener::DEFAULT_QUAD_TOL,
            gamma_tol: 1e-6,
            seed: 0,
        }
    }
}

/// One experiment, fully determined (together with the seed) by this value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub mode: Mode,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_mode: Option<FeedbackKind>,
    #[serde(default)]
    pub numerics: Numerics,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.parameters
            .get(name)
            .copied()
            .with_context(|| format!("missing required parameter {name:?} for {:?}", self.mode))
    }

    pub fn count_param(&self, name: &str) -> Result<u64> {
        let v = self.param(name)?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            bail!("parameter {name:?} must be a non-negative integer, got {v}");
        }
        Ok(v as u64)
    }

    /// Checks mode/model pairing, required parameters, and grid sanity.
    pub fn validate(&self) -> Result<()> {
        let required: &[&str] = match (self.model, self.mode) {
            (Model::RotatingField, Mode::Optimal | Mode::Uncontrolled) => &["B", "omega", "T"],
            (Model::RotatingField, Mode::Practical) => &["B", "omega", "T", "B_est", "omega_est"],
            (Model::RotatingField, Mode::Feedback) => &["B", "omega", "T", "rounds"],
            (Model::LandauZener, Mode::Scan | Mode::Optimize) => &["Gamma", "xi", "T"],
            (model, mode) => bail!("mode {mode:?} is not defined for model {model:?}"),
        };
        for name in required {
            self.param(name)?;
        }
        if matches!(self.mode, Mode::Scan | Mode::Optimize) {
            let grid = self
                .grid
                .context("scan/optimize need a grid: {\"min\":…, \"max\":…, \"points\":…}")?;
            if !(grid.min < grid.max) {
                bail!("grid needs min < max, got [{}, {}]", grid.min, grid.max);
            }
            if grid.points < 2 {
                bail!("grid needs at least 2 points, got {}", grid.points);
            }
        }
        if self.model == Model::RotatingField && self.mode == Mode::Feedback {
            if self.count_param("rounds")? == 0 {
                bail!("feedback needs rounds >= 1");
            }
            if self.feedback_mode == Some(FeedbackKind::MonteCarlo) {
                let samples = self.count_param("samples").unwrap_or(100_000);
                if samples < 1000 {
                    bail!("Monte-Carlo feedback needs samples >= 1000, got {samples}");
                }
            }
        }
        if !(self.numerics.steps_per_unit >= 1.0) {
            bail!("numerics.steps_per_unit must be >= 1");
        }
        if !(self.numerics.quad_tol > 0.0) {
            bail!("numerics.quad_tol must be positive");
        }
        Ok(())
    }
}
