//! `qfe`: precision limits and coherent control for time-dependent
//! three-level estimation models.
//!
//! All physical quantities are dimensionless with ħ = 1 and unit magnetic
//! moment. Reports are deterministic given config + seed; wall time is
//! printed to stderr only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use qfe::evolve::{self, PropagationGrid};
use qfe::models::landau_zener::{self, LandauZenerParams};
use qfe::models::rotating_field::{self, ControlEstimates, FeedbackMode, RotatingFieldParams};
use qfe::qfi::CostMatrix;

use config::{ExperimentConfig, FeedbackKind, GridSpec, Mode, Model, Numerics};
use report::{Format, NumericsUsed, RunReport, RunResult};

#[derive(Parser)]
#[command(
    name = "qfe",
    version,
    about = "Multi-parameter quantum Cramér–Rao limits and coherent control \
             for time-dependent three-level Hamiltonians (ħ = 1, unit magnetic moment)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rotating-field model: estimate (B, ω) simultaneously
    Rf {
        #[command(subcommand)]
        mode: RfMode,
    },
    /// Landau–Zener sweep: estimate (Γ, ξ) simultaneously
    Lz {
        #[command(subcommand)]
        mode: LzMode,
    },
    /// Run an experiment fully described by a JSON config file
    Run {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Substeps per unit time for the propagator (default 4096)
    #[arg(long)]
    steps: Option<f64>,
    /// Absolute tolerance of the kernel quadratures (default 1e-10)
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for Monte-Carlo draws (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report to this file (atomically) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; CSV is defined for scans (default json, csv for scans)
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Clone)]
struct RfParams {
    /// Field amplitude B (> 0)
    #[arg(long = "B")]
    b: Option<f64>,
    /// Rotation frequency ω
    #[arg(long)]
    omega: Option<f64>,
    /// Interrogation time T (> 0)
    #[arg(long = "T")]
    t: Option<f64>,
    /// Base config file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Subcommand)]
enum RfMode {
    /// Optimally controlled simultaneous estimation
    Optimal(RfParams),
    /// No control, with the attaining probe state
    Uncontrolled(RfParams),
    /// Control implemented with estimates (B_est, omega_est)
    Practical {
        #[command(flatten)]
        params: RfParams,
        /// Estimate B_c used in the control
        #[arg(long = "B-est")]
        b_est: Option<f64>,
        /// Estimate ω_c used in the control
        #[arg(long = "omega-est")]
        omega_est: Option<f64>,
    },
    /// Two-stage feedback: N uncontrolled rounds, then N controlled rounds
    Feedback {
        #[command(flatten)]
        params: RfParams,
        /// Rounds N per stage
        #[arg(long)]
        rounds: Option<u64>,
        /// analytic or monte-carlo
        #[arg(long, value_enum)]
        mode: Option<FeedbackKind>,
        /// Monte-Carlo sample count (>= 1000)
        #[arg(long)]
        samples: Option<u64>,
    },
}

#[derive(Args, Clone)]
struct LzParams {
    /// Level splitting Γ (> 0)
    #[arg(long = "Gamma")]
    gamma_split: Option<f64>,
    /// Sweep proportionality ξ (ν = ξΓ)
    #[arg(long)]
    xi: Option<f64>,
    /// Sweep horizon T (> 0)
    #[arg(long = "T")]
    t: Option<f64>,
    /// Scan bracket lower end (default 0)
    #[arg(long)]
    gamma_min: Option<f64>,
    /// Scan bracket upper end (default 3)
    #[arg(long)]
    gamma_max: Option<f64>,
    /// Base config file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Subcommand)]
enum LzMode {
    /// Evaluate the γ-scan objective on a uniform grid (CSV by default)
    Scan {
        #[command(flatten)]
        params: LzParams,
        /// Grid points (default 301)
        #[arg(long)]
        points: Option<usize>,
    },
    /// Grid + golden-section minimization of the scan objective
    Optimize {
        #[command(flatten)]
        params: LzParams,
        /// Stop when the γ interval is at most this wide (default 1e-6)
        #[arg(long)]
        gamma_tol: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn apply_common(numerics: &mut Numerics, common: &CommonOpts) {
    if let Some(steps) = common.steps {
        numerics.steps_per_unit = steps;
    }
    if let Some(tol) = common.tol {
        numerics.quad_tol = tol;
    }
    if let Some(seed) = common.seed {
        numerics.seed = seed;
    }
}

fn base_config(path: &Option<PathBuf>, model: Model, mode: Mode) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig {
            model,
            mode,
            parameters: BTreeMap::new(),
            grid: None,
            feedback_mode: None,
            numerics: Numerics::default(),
        },
    };
    config.model = model;
    config.mode = mode;
    Ok(config)
}

fn set_param(config: &mut ExperimentConfig, name: &str, value: Option<f64>) {
    if let Some(v) = value {
        config.parameters.insert(name.to_string(), v);
    }
}

fn rf_config(params: &RfParams, mode: Mode) -> Result<ExperimentConfig> {
    let mut config = base_config(&params.config, Model::RotatingField, mode)?;
    set_param(&mut config, "B", params.b);
    set_param(&mut config, "omega", params.omega);
    set_param(&mut config, "T", params.t);
    apply_common(&mut config.numerics, &params.common);
    Ok(config)
}

fn lz_config(params: &LzParams, mode: Mode) -> Result<ExperimentConfig> {
    let mut config = base_config(&params.config, Model::LandauZener, mode)?;
    set_param(&mut config, "Gamma", params.gamma_split);
    set_param(&mut config, "xi", params.xi);
    set_param(&mut config, "T", params.t);
    apply_common(&mut config.numerics, &params.common);
    let mut grid = config.grid.unwrap_or(GridSpec {
        min: 0.0,
        max: 3.0,
        points: landau_zener::DEFAULT_SCAN_POINTS,
    });
    if let Some(lo) = params.gamma_min {
        grid.min = lo;
    }
    if let Some(hi) = params.gamma_max {
        grid.max = hi;
    }
    config.grid = Some(grid);
    Ok(config)
}

fn run_command(command: Command) -> Result<()> {
    let (config, common) = match command {
        Command::Rf { mode } => match mode {
            RfMode::Optimal(p) => (rf_config(&p, Mode::Optimal)?, p.common),
            RfMode::Uncontrolled(p) => (rf_config(&p, Mode::Uncontrolled)?, p.common),
            RfMode::Practical {
                params,
                b_est,
                omega_est,
            } => {
                let mut config = rf_config(&params, Mode::Practical)?;
                set_param(&mut config, "B_est", b_est);
                set_param(&mut config, "omega_est", omega_est);
                (config, params.common)
            }
            RfMode::Feedback {
                params,
                rounds,
                mode,
                samples,
            } => {
                let mut config = rf_config(&params, Mode::Feedback)?;
                set_param(&mut config, "rounds", rounds.map(|r| r as f64));
                set_param(&mut config, "samples", samples.map(|s| s as f64));
                if let Some(kind) = mode {
                    config.feedback_mode = Some(kind);
                }
                (config, params.common)
            }
        },
        Command::Lz { mode } => match mode {
            LzMode::Scan { params, points } => {
                let mut config = lz_config(&params, Mode::Scan)?;
                if let Some(points) = points {
                    if let Some(grid) = &mut config.grid {
                        grid.points = points;
                    }
                }
                (config, params.common)
            }
            LzMode::Optimize { params, gamma_tol } => {
                let mut config = lz_config(&params, Mode::Optimize)?;
                if let Some(tol) = gamma_tol {
                    config.numerics.gamma_tol = tol;
                }
                (config, params.common)
            }
        },
        Command::Run { config, common } => {
            let mut loaded = ExperimentConfig::load(&config)?;
            apply_common(&mut loaded.numerics, &common);
            (loaded, common)
        }
    };

    config.validate()?;
    let started = Instant::now();
    let result = dispatch(&config)?;
    let report = RunReport {
        numerics_used: NumericsUsed {
            steps_per_unit: config.numerics.steps_per_unit,
            total_steps: total_steps(&config),
            quad_tol: config.numerics.quad_tol,
            seed: config.numerics.seed,
        },
        config,
        result,
    };
    let format = common.format.unwrap_or(match &report.result {
        RunResult::Scan(_) => Format::Csv,
        _ => Format::Json,
    });
    let text = report::render(&report, format)?;
    report::emit(&text, common.out.as_deref())?;
    eprintln!(
        "completed in {:.1} ms",
        started.elapsed().as_secs_f64() * 1e3
    );
    Ok(())
}

fn total_steps(config: &ExperimentConfig) -> Option<u64> {
    match (config.model, config.mode) {
        (Model::RotatingField, Mode::Optimal | Mode::Practical) => {
            let t = config.parameters.get("T")?;
            Some((t * config.numerics.steps_per_unit).ceil() as u64)
        }
        _ => None,
    }
}

fn scan_threads() -> usize {
    std::env::var("QFE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn dispatch(config: &ExperimentConfig) -> Result<RunResult> {
    match config.model {
        Model::RotatingField => {
            let p = RotatingFieldParams::new(
                config.param("B")?,
                config.param("omega")?,
                config.param("T")?,
            )?;
            match config.mode {
                Mode::Optimal => {
                    let op = rotating_field::optimal_total_hamiltonian(&p);
                    let grid = PropagationGrid::from_resolution(
                        0.0,
                        p.duration,
                        config.numerics.steps_per_unit,
                    )?;
                    let gens = evolve::generators(&op, &grid)?;
                    let rep = qfe::qfi::precision_report(
                        &qfe::spin::plus_minus_state(),
                        &gens,
                        &CostMatrix::identity(2),
                    )?;
                    Ok(RunResult::Precision(report::precision_output(
                        &rep,
                        &["B".into(), "omega".into()],
                        Some(&gens),
                    )))
                }
                Mode::Uncontrolled => {
                    let gens = rotating_field::closed_generators(&p)?;
                    let rep = rotating_field::uncontrolled_precision(&p)?;
                    Ok(RunResult::Precision(report::precision_output(
                        &rep,
                        &["B".into(), "omega".into()],
                        Some(&gens),
                    )))
                }
                Mode::Practical => {
                    let est =
                        ControlEstimates::new(config.param("B_est")?, config.param("omega_est")?)?;
                    let op = rotating_field::practical_total_hamiltonian(&p, &est);
                    let grid = PropagationGrid::from_resolution(
                        0.0,
                        p.duration,
                        config.numerics.steps_per_unit,
                    )?;
                    let gens = evolve::generators(&op, &grid)?;
                    let rep = qfe::qfi::precision_report(
                        &qfe::spin::plus_minus_state(),
                        &gens,
                        &CostMatrix::identity(2),
                    )?;
                    Ok(RunResult::Precision(report::precision_output(
                        &rep,
                        &["B".into(), "omega".into()],
                        Some(&gens),
                    )))
                }
                Mode::Feedback => {
                    let rounds = config.count_param("rounds")?;
                    let kind = config.feedback_mode.unwrap_or(FeedbackKind::Analytic);
                    let (mode, samples) = match kind {
                        FeedbackKind::Analytic => (FeedbackMode::Analytic, None),
                        FeedbackKind::MonteCarlo => {
                            let samples = config.count_param("samples").unwrap_or(100_000);
                            (
                                FeedbackMode::MonteCarlo {
                                    samples,
                                    seed: config.numerics.seed,
                                },
                                Some(samples),
                            )
                        }
                    };
                    let fb = rotating_field::feedback_precision(&p, rounds, mode)?;
                    Ok(RunResult::Feedback(report::FeedbackOutput {
                        omega_variance: fb.omega_variance,
                        field_variance: fb.field_variance,
                        rounds,
                        mode: match kind {
                            FeedbackKind::Analytic => "analytic".into(),
                            FeedbackKind::MonteCarlo => "monte_carlo".into(),
                        },
                        samples,
                    }))
                }
                _ => unreachable!("validated"),
            }
        }
        Model::LandauZener => {
            let p = LandauZenerParams::new(
                config.param("Gamma")?,
                config.param("xi")?,
                config.param("T")?,
            )?;
            let grid = config.grid.expect("validated");
            let cost = CostMatrix::identity(2);
            match config.mode {
                Mode::Scan => {
                    let scan = landau_zener::gamma_scan(
                        &p,
                        &cost,
                        grid.min,
                        grid.max,
                        grid.points,
                        config.numerics.quad_tol,
                        scan_threads(),
                    )?;
                    Ok(RunResult::Scan(report::scan_output(&scan)))
                }
                Mode::Optimize => {
                    let (gamma_star, cost_star, scan) = landau_zener::optimize_gamma(
                        &p,
                        &cost,
                        (grid.min, grid.max),
                        config.numerics.gamma_tol,
                        config.numerics.quad_tol,
                    )?;
                    Ok(RunResult::Optimize(report::OptimizeOutput {
                        gamma_star,
                        cost_star,
                        scan: report::scan_output(&scan),
                    }))
                }
                _ => unreachable!("validated"),
            }
        }
    }
}
