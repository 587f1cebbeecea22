//! Spin-1 particle in a uniformly rotating magnetic field.
//!
//! Bare Hamiltonian H(t) = -B(cos ωt·J_X + sin ωt·J_Z), estimating the
//! amplitude B and the rotation frequency ω simultaneously (magnetic moment
//! and ħ both 1). The module carries the closed-form propagator and
//! generators, the optimal and practical controls, the small-detuning
//! expansion of the practically-controlled pipeline, and the two-stage
//! feedback scheme.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evolve::{self, GeneratorSet, OperatorFn, PropagationGrid, TimeDepOperator};
use crate::linalg::CMatrix;
use crate::qfi::{self, CostMatrix, PrecisionReport, QfiMatrix};
use crate::rng;
use crate::spin;

/// Field amplitude B, rotation frequency ω, interrogation time T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFieldParams {
    pub field: f64,
    pub frequency: f64,
    pub duration: f64,
}

impl RotatingFieldParams {
    pub fn new(field: f64, frequency: f64, duration: f64) -> Result<Self> {
        if !(field > 0.0) {
            return Err(Error::InvalidParameter {
                name: "field",
                reason: format!("B must be positive, got {field}"),
            });
        }
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: format!("T must be positive, got {duration}"),
            });
        }
        if !frequency.is_finite() {
            return Err(Error::InvalidParameter {
                name: "frequency",
                reason: "ω must be finite".into(),
            });
        }
        Ok(Self {
            field,
            frequency,
            duration,
        })
    }

    /// √(B² + ω²).
    pub fn total_rate(&self) -> f64 {
        self.field.hypot(self.frequency)
    }
}

/// Estimates (B_c, ω_c) used in place of the true values when implementing
/// the control in hardware.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEstimates {
    pub field: f64,
    pub frequency: f64,
}

impl ControlEstimates {
    pub fn new(field: f64, frequency: f64) -> Result<Self> {
        if !(field > 0.0) {
            return Err(Error::InvalidParameter {
                name: "field estimate",
                reason: format!("B_c must be positive, got {field}"),
            });
        }
        Ok(Self { field, frequency })
    }

    pub fn exact(p: &RotatingFieldParams) -> Self {
        Self {
            field: p.field,
            frequency: p.frequency,
        }
    }
}

/// Parameter order used by every generator set and Fisher matrix here.
pub const PARAM_FIELD: usize = 0;
pub const PARAM_FREQUENCY: usize = 1;

fn param_names() -> Vec<String> {
    vec!["B".into(), "omega".into()]
}

/// H(t) = -B(cos ωt·J_X + sin ωt·J_Z) with gradients
/// ∂_B H = -(cos ωt·J_X + sin ωt·J_Z) and
/// ∂_ω H = -B·t·(-sin ωt·J_X + cos ωt·J_Z).
pub fn hamiltonian(p: &RotatingFieldParams) -> TimeDepOperator {
    let ops = spin::spin1();
    let (b, w) = (p.field, p.frequency);
    let jx = ops.jx.clone();
    let jz = ops.jz.clone();
    let ham: OperatorFn = {
        let (jx, jz) = (jx.clone(), jz.clone());
        Arc::new(move |t| Ok(&jx.scale_re(-b * (w * t).cos()) + &jz.scale_re(-b * (w * t).sin())))
    };
    let grad_b: OperatorFn = {
        let (jx, jz) = (jx.clone(), jz.clone());
        Arc::new(move |t| Ok(&jx.scale_re(-(w * t).cos()) + &jz.scale_re(-(w * t).sin())))
    };
    let grad_w: OperatorFn = Arc::new(move |t| {
        Ok(&jx.scale_re(b * t * (w * t).sin()) + &jz.scale_re(-b * t * (w * t).cos()))
    });
    TimeDepOperator::new(3, param_names(), ham, vec![grad_b, grad_w]).expect("static construction")
}

/// Closed-form propagator U(0→t) = e^{iωt·J_Y}·e^{i(B·J_X - ω·J_Y)t}.
pub fn closed_propagator(p: &RotatingFieldParams, t: f64) -> Result<CMatrix> {
    let ops = spin::spin1();
    let a = &ops.jx.scale_re(p.field) - &ops.jy.scale_re(p.frequency);
    let left = crate::linalg::expm_i(&ops.jy, -p.frequency * t)?;
    let right = crate::linalg::expm_i(&a, -t)?;
    Ok(left.matmul(&right))
}

/// Exact uncontrolled generators, in terms of the tilted operators J_n, J_n⊥
/// at tilt θ = atan2(-ω, B) (so that J_n is the rotation axis of
/// B·J_X - ω·J_Y):
///
///   ℋ_B = -cosθ·T·J_n + sinθ·sin(ΩT)/Ω·J_n⊥ + sinθ·(1-cos ΩT)/Ω·J_Z
///   ℋ_ω = B·(-T·sin(ΩT)/Ω + (1-cos ΩT)/Ω²)·J_Z
///       + B·(sin(ΩT)/Ω² - T·cos(ΩT)/Ω)·J_n⊥
///
/// with Ω = √(B²+ω²). For ΩT ≫ 1 these approach
/// ℋ_B ≈ -(BT/Ω)·J_n and ℋ_ω ≈ -(BT/Ω)(cos ΩT·J_n⊥ + sin ΩT·J_Z), the
/// residuals being bounded by 2/Ω.
pub fn closed_generators(p: &RotatingFieldParams) -> Result<GeneratorSet> {
    let ops = spin::spin1();
    let om = p.total_rate();
    let theta = (-p.frequency).atan2(p.field);
    let (jn, jnp) = spin::tilted(theta);
    let (st, ct) = theta.sin_cos();
    let t = p.duration;
    let phase = om * t;
    // frame combination a·J_n + b·J_n⊥ + c·J_Z
    let tilted_combo =
        |n: f64, np: f64, z: f64| &(&jn.scale_re(n) + &jnp.scale_re(np)) + &ops.jz.scale_re(z);

    let h_b = tilted_combo(
        -ct * t,
        st * phase.sin() / om,
        st * (1.0 - phase.cos()) / om,
    );
    let h_w = tilted_combo(
        0.0,
        p.field * (phase.sin() / (om * om) - t * phase.cos() / om),
        p.field * (-t * phase.sin() / om + (1.0 - phase.cos()) / (om * om)),
    );

    Ok(GeneratorSet {
        horizon: t,
        params: param_names(),
        matrices: vec![h_b, h_w],
    })
}

/// Uncontrolled two-parameter precision with the attaining probe state.
pub fn uncontrolled_precision(p: &RotatingFieldParams) -> Result<PrecisionReport> {
    let psi = spin::rotating_field_probe(p.field, p.frequency, p.duration)?;
    let gens = closed_generators(p)?;
    qfi::precision_report(&psi, &gens, &CostMatrix::identity(2))
}

/// The asymptotic precision both parameters reach without control:
/// (B² + ω²)/(4B²T²).
pub fn uncontrolled_asymptotic_variance(p: &RotatingFieldParams) -> f64 {
    let o2 = p.total_rate().powi(2);
    o2 / (4.0 * p.field * p.field * p.duration * p.duration)
}

/// Total Hamiltonian under the shared optimal control: H + H_c = -ω·J_Y,
/// with the bare gradients attached (they drive the generator integrals).
pub fn optimal_total_hamiltonian(p: &RotatingFieldParams) -> TimeDepOperator {
    let ops = spin::spin1();
    let jy = ops.jy.scale_re(-p.frequency);
    hamiltonian(p).with_hamiltonian(Arc::new(move |_| Ok(jy.clone())))
}

/// Optimally controlled precision: ℋ_B = -T·J_X and ℋ_ω = -(B/2)T²·J_Z give
/// Δ²B = 1/(4T²) and Δ²ω = 1/(B²T⁴) on the (|-1⟩+|1⟩)/√2 probe.
pub fn optimal_controlled_precision(
    p: &RotatingFieldParams,
    steps_per_unit: f64,
) -> Result<PrecisionReport> {
    let op = optimal_total_hamiltonian(p);
    let grid = PropagationGrid::from_resolution(0.0, p.duration, steps_per_unit)?;
    let gens = evolve::generators(&op, &grid)?;
    qfi::precision_report(&spin::plus_minus_state(), &gens, &CostMatrix::identity(2))
}

/// Total Hamiltonian when the control is implemented with estimates:
/// H(t) + B_c(cos ω_c t·J_X + sin ω_c t·J_Z) - ω_c·J_Y.
pub fn practical_total_hamiltonian(
    p: &RotatingFieldParams,
    est: &ControlEstimates,
) -> TimeDepOperator {
    let ops = spin::spin1();
    let (b, w) = (p.field, p.frequency);
    let (bc, wc) = (est.field, est.frequency);
    let (jx, jz, jy) = (ops.jx.clone(), ops.jz.clone(), ops.jy.clone());
    hamiltonian(p).with_hamiltonian(Arc::new(move |t| {
        let bare = &jx.scale_re(-b * (w * t).cos()) + &jz.scale_re(-b * (w * t).sin());
        let ctrl = &jx.scale_re(bc * (wc * t).cos()) + &jz.scale_re(bc * (wc * t).sin());
        Ok(&(&bare + &ctrl) + &jy.scale_re(-wc))
    }))
}

/// Fully numeric practical-control precision.
pub fn practical_precision(
    p: &RotatingFieldParams,
    est: &ControlEstimates,
    steps_per_unit: f64,
) -> Result<PrecisionReport> {
    let op = practical_total_hamiltonian(p, est);
    let grid = PropagationGrid::from_resolution(0.0, p.duration, steps_per_unit)?;
    let gens = evolve::generators(&op, &grid)?;
    qfi::precision_report(&spin::plus_minus_state(), &gens, &CostMatrix::identity(2))
}

const EXPANSION_RANGE: f64 = 0.1;

fn check_expansion_range(d_field: f64, d_frequency: f64) -> Result<()> {
    if d_field.abs() > EXPANSION_RANGE || d_frequency.abs() > EXPANSION_RANGE {
        return Err(Error::InvalidParameter {
            name: "detuning",
            reason: format!(
                "expansion is valid for |δ| ≤ {EXPANSION_RANGE}, got δB = {d_field}, δω = {d_frequency}"
            ),
        });
    }
    Ok(())
}

/// Second-order expansion of the practical-control generators around exact
/// estimates, δB = B_c - B and δω = ω_c - ω:
///
///   ℋ_B = -T·J_X + δω·(BT³/6·J_Y + T²/2·J_Z)
///       + δω²·(B²T⁵/40 + T³/6)·J_X + δBδω·(T³/3·J_Y - BT⁴/12·J_Z)
///   ℋ_ω = -(BT²/2)·J_Z - δω·(BT³/3)·J_X - δB·(BT³/3)·J_Y
///       + δω²·(B²T⁵/15·J_Y + BT⁴/8·J_Z) + δB²·(BT⁴/8)·J_Z
///       - δBδω·(B²T⁵/30)·J_X
///
/// Every coefficient is validated against central finite differences of the
/// numeric pipeline in the test suite.
pub fn expansion_generators(
    p: &RotatingFieldParams,
    d_field: f64,
    d_frequency: f64,
) -> Result<GeneratorSet> {
    check_expansion_range(d_field, d_frequency)?;
    let (b, t) = (p.field, p.duration);
    let (db, dw) = (d_field, d_frequency);
    let (t2, t3, t4, t5) = (t * t, t.powi(3), t.powi(4), t.powi(5));

    let h_b = spin::axis_combination(
        -t + (b * b * t5 / 40.0 + t3 / 6.0) * dw * dw,
        b * t3 / 6.0 * dw + t3 / 3.0 * db * dw,
        t2 / 2.0 * dw - b * t4 / 12.0 * db * dw,
    );
    let h_w = spin::axis_combination(
        -b * t3 / 3.0 * dw - b * b * t5 / 30.0 * db * dw,
        -b * t3 / 3.0 * db + b * b * t5 / 15.0 * dw * dw,
        -b * t2 / 2.0 + b * t4 / 8.0 * dw * dw + b * t4 / 8.0 * db * db,
    );

    Ok(GeneratorSet {
        horizon: t,
        params: param_names(),
        matrices: vec![h_b, h_w],
    })
}

/// Closed-form Fisher elements of the expansion, on the (|-1⟩+|1⟩)/√2 probe:
///
///   F_BB = 4T²·[1 - (B²T⁴/20 + T²/12)·δω²]
///   F_ωω = B²T⁴·[1 - T²δω²/18 - T²δB²/2]
///   F_ωB = BT⁴·δω/3 + (3/10)·B²T⁶·δBδω
///
/// (finite-difference validated; at δB = δω the δω²/δB² split of F_ωω is not
/// observable and any relabeling of the two gives the same value).
pub fn expansion_qfi(p: &RotatingFieldParams, d_field: f64, d_frequency: f64) -> Result<QfiMatrix> {
    check_expansion_range(d_field, d_frequency)?;
    let (b, t) = (p.field, p.duration);
    let (db, dw) = (d_field, d_frequency);
    let (t2, t4, t6) = (t * t, t.powi(4), t.powi(6));
    let f_bb = 4.0 * t2 * (1.0 - (b * b * t4 / 20.0 + t2 / 12.0) * dw * dw);
    let f_ww = b * b * t4 * (1.0 - t2 * dw * dw / 18.0 - t2 * db * db / 2.0);
    let f_wb = b * t4 * dw / 3.0 + 0.3 * b * b * t6 * db * dw;
    Ok(QfiMatrix::from_entries(2, vec![f_bb, f_wb, f_wb, f_ww]))
}

/// First-order variance estimates for the practically-controlled run,
/// (Δ²ω, Δ²B):
///
///   Δ²ω = 1 / (B²T⁴·[1 - 3T²δω²/4 - T²δB²/2 + 2T²δBδω/3])
///   Δ²B = 1 / (4T²·[1 - (B²T⁴/20 + T²/3)δω² - 4T²δB²/9 + 2T²δBδω/3])
///
/// These are the estimates the feedback analysis averages; at δB = δω they
/// agree with the inverse of [`expansion_qfi`] through second order.
pub fn practical_variance_estimates(
    p: &RotatingFieldParams,
    d_field: f64,
    d_frequency: f64,
) -> (f64, f64) {
    let (b, t) = (p.field, p.duration);
    let (db, dw) = (d_field, d_frequency);
    let t2 = t * t;
    let bracket_w =
        1.0 - (3.0 * t2 * dw * dw / 4.0 + t2 * db * db / 2.0) + 2.0 * t2 * db * dw / 3.0;
    let bracket_b = 1.0 - (b * b * t2 * t2 / 20.0 + t2 / 3.0) * dw * dw - 4.0 * t2 * db * db / 9.0
        + 2.0 * t2 * db * dw / 3.0;
    (
        1.0 / (b * b * t2 * t2 * bracket_w),
        1.0 / (4.0 * t2 * bracket_b),
    )
}

/// How the feedback run evaluates the post-control variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackMode {
    /// Closed-form average over the first-stage estimate distribution.
    Analytic,
    /// Monte-Carlo average of the variance-estimate denominators over
    /// Gaussian (δω, δB) draws keyed by (seed, sample index).
    MonteCarlo { samples: u64, seed: u64 },
}

/// Final variances of the two-stage scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackPrecision {
    pub omega_variance: f64,
    pub field_variance: f64,
}

/// Variance of the first-stage (uncontrolled, N-round) estimates of either
/// parameter: (B² + ω²)/(4NB²T²).
pub fn initial_estimate_variance(p: &RotatingFieldParams, rounds: u64) -> f64 {
    uncontrolled_asymptotic_variance(p) / rounds as f64
}

/// Two-stage feedback: N uncontrolled rounds give (B_c, ω_c), then N
/// controlled rounds run with them. Analytic closed forms:
///
///   Δ²ω = 1 / (B²T⁴·[1 - 5(B²+ω²)/(16NB²)])
///   Δ²B = 1 / (4T²·[1 - (7/9 + B²T²/20)(B²+ω²)/(4NB²)])
///
/// The Monte-Carlo mode draws independent zero-mean Gaussians for (δω, δB)
/// with the first-stage variance and averages the denominators of
/// [`practical_variance_estimates`]; the two modes agree in expectation.
pub fn feedback_precision(
    p: &RotatingFieldParams,
    rounds: u64,
    mode: FeedbackMode,
) -> Result<FeedbackPrecision> {
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "at least one feedback round is required".into(),
        });
    }
    let (b, t) = (p.field, p.duration);
    let o2 = p.total_rate().powi(2);
    let n = rounds as f64;
    let (bracket_w, bracket_b) = match mode {
        FeedbackMode::Analytic => {
            let bw = 1.0 - 5.0 * o2 / (16.0 * n * b * b);
            let bb = 1.0 - (7.0 / 9.0 + b * b * t * t / 20.0) * o2 / (4.0 * n * b * b);
            (bw, bb)
        }
        FeedbackMode::MonteCarlo { samples, seed } => {
            if samples < 1000 {
                return Err(Error::InvalidParameter {
                    name: "samples",
                    reason: format!("Monte-Carlo needs at least 1000 samples, got {samples}"),
                });
            }
            let sigma = initial_estimate_variance(p, rounds).sqrt();
            let t2 = t * t;
            let mut w_brackets = Vec::with_capacity(samples as usize);
            let mut b_brackets = Vec::with_capacity(samples as usize);
            for i in 0..samples {
                let (z0, z1) = rng::normal_pair(seed, i);
                let dw = sigma * z0;
                let db = sigma * z1;
                w_brackets.push(
                    1.0 - (3.0 * t2 * dw * dw / 4.0 + t2 * db * db / 2.0)
                        + 2.0 * t2 * db * dw / 3.0,
                );
                b_brackets.push(
                    1.0 - (b * b * t2 * t2 / 20.0 + t2 / 3.0) * dw * dw - 4.0 * t2 * db * db / 9.0
                        + 2.0 * t2 * db * dw / 3.0,
                );
            }
            (
                rng::pairwise_sum(&w_brackets) / samples as f64,
                rng::pairwise_sum(&b_brackets) / samples as f64,
            )
        }
    };
    if bracket_w <= 0.0 || bracket_b <= 0.0 {
        return Err(Error::RegimeViolation(format!(
            "feedback with N = {rounds} rounds is outside the validity regime \
             (denominator brackets {bracket_w:.4}, {bracket_b:.4} must be positive)"
        )));
    }
    Ok(FeedbackPrecision {
        omega_variance: 1.0 / (b * b * t.powi(4) * bracket_w),
        field_variance: 1.0 / (4.0 * t * t * bracket_b),
    })
}

/// Round count beyond which both feedback variances sit within ~11% of the
/// optimally-controlled values.
pub fn feedback_threshold_rounds(p: &RotatingFieldParams) -> f64 {
    let (b, t) = (p.field, p.duration);
    let o2 = p.total_rate().powi(2);
    (25.0 + b * b * t * t) * o2 / (80.0 * b * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::DEFAULT_STEPS_PER_UNIT;
    use crate::linalg::expect;

    #[test]
    fn hamiltonian_special_values() {
        let p = RotatingFieldParams::new(1.5, 0.9, 2.0).unwrap();
        let op = hamiltonian(&p);
        let ops = spin::spin1();
        // t = 0 → -B·J_X
        let h0 = op.hamiltonian_at(0.0).unwrap();
        assert!(h0.max_diff(&ops.jx.scale_re(-1.5)) < 1e-14);
        // ∂_ωH at t = 0 is the zero matrix
        let g = op.gradient_at(PARAM_FREQUENCY, 0.0).unwrap();
        assert!(g.max_norm() < 1e-14);
        // ω = 0 → time-independent -B·J_X
        let p0 = RotatingFieldParams::new(1.5, 0.0, 2.0).unwrap();
        let op0 = hamiltonian(&p0);
        for &t in &[0.0, 0.7, 1.9] {
            assert!(
                op0.hamiltonian_at(t)
                    .unwrap()
                    .max_diff(&ops.jx.scale_re(-1.5))
                    < 1e-14
            );
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(RotatingFieldParams::new(0.0, 1.0, 1.0).is_err());
        assert!(RotatingFieldParams::new(1.0, 1.0, 0.0).is_err());
        assert!(ControlEstimates::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn closed_propagator_special_cases() {
        let p = RotatingFieldParams::new(1.0, 0.5, 2.0).unwrap();
        assert!(
            closed_propagator(&p, 0.0)
                .unwrap()
                .max_diff(&CMatrix::identity(3))
                < 1e-13
        );
        // ω = 0 → exp(iBt·J_X)
        let p0 = RotatingFieldParams::new(1.3, 0.0, 2.0).unwrap();
        let ops = spin::spin1();
        let want = crate::linalg::expm_i(&ops.jx, -1.3 * 1.7).unwrap();
        assert!(closed_propagator(&p0, 1.7).unwrap().max_diff(&want) < 1e-12);
    }

    #[test]
    fn closed_generators_at_zero_frequency() {
        // θ = 0: ℋ_B = -T·J_X exactly.
        let p = RotatingFieldParams::new(1.4, 0.0, 3.0).unwrap();
        let gens = closed_generators(&p).unwrap();
        let ops = spin::spin1();
        assert!(gens.matrices[PARAM_FIELD].max_diff(&ops.jx.scale_re(-3.0)) < 1e-13);
    }

    #[test]
    fn closed_generators_large_horizon_asymptotics() {
        // ℋ_B approaches -(BT/Ω)·J_n and ℋ_ω approaches
        // -(BT/Ω)(cos ΩT·J_n⊥ + sin ΩT·J_Z), residuals (2-norm) ≤ 2/Ω.
        let p = RotatingFieldParams::new(1.0, 1.0, 50.0).unwrap();
        let omega_total = p.total_rate();
        let theta = (-p.frequency).atan2(p.field);
        let (jn, jnp) = spin::tilted(theta);
        let gens = closed_generators(&p).unwrap();
        let scale = -p.field * p.duration / omega_total;
        let phase = omega_total * p.duration;
        let lead_b = jn.scale_re(scale);
        let lead_w =
            &jnp.scale_re(scale * phase.cos()) + &spin::spin1().jz.scale_re(scale * phase.sin());
        // spin-1 axis operators have unit spectral norm; Frobenius = √2·|coeff|
        let bound = 2.0 / omega_total;
        for (m, lead) in [(PARAM_FIELD, lead_b), (PARAM_FREQUENCY, lead_w)] {
            let residual = &gens.matrices[m] - &lead;
            assert!(
                residual.frobenius_norm() / 2.0f64.sqrt() <= bound + 1e-12,
                "param {m}: residual {} vs bound {}",
                residual.frobenius_norm() / 2.0f64.sqrt(),
                bound
            );
        }
    }

    #[test]
    fn uncontrolled_precision_near_asymptote_at_t200() {
        let p = RotatingFieldParams::new(1.0, 1.0, 200.0).unwrap();
        let rep = uncontrolled_precision(&p).unwrap();
        let target = uncontrolled_asymptotic_variance(&p);
        assert!((rep.variances[PARAM_FIELD] / target - 1.0).abs() < 0.02);
        assert!((rep.variances[PARAM_FREQUENCY] / target - 1.0).abs() < 0.02);
        assert!(rep.saturable, "residual {}", rep.saturation_residual);

        let p0 = RotatingFieldParams::new(1.0, 0.0, 200.0).unwrap();
        let rep0 = uncontrolled_precision(&p0).unwrap();
        let target0 = 1.0 / (4.0 * 200.0f64 * 200.0);
        assert!((rep0.variances[PARAM_FIELD] / target0 - 1.0).abs() < 0.02);
        assert!((rep0.variances[PARAM_FREQUENCY] / target0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn optimal_precision_examples() {
        let p = RotatingFieldParams::new(1.0, 0.7, 2.0).unwrap();
        let rep = optimal_controlled_precision(&p, DEFAULT_STEPS_PER_UNIT).unwrap();
        assert!((rep.variances[PARAM_FIELD] - 0.0625).abs() / 0.0625 < 1e-8);
        assert!((rep.variances[PARAM_FREQUENCY] - 0.0625).abs() / 0.0625 < 1e-8);

        let p = RotatingFieldParams::new(2.0, 5.0, 3.0).unwrap();
        let rep = optimal_controlled_precision(&p, DEFAULT_STEPS_PER_UNIT).unwrap();
        let want = 1.0 / (4.0 * 81.0);
        assert!((rep.variances[PARAM_FREQUENCY] - want).abs() / want < 1e-8);
    }

    #[test]
    fn control_beats_uncontrolled_at_large_frequency() {
        let p = RotatingFieldParams::new(1.0, 5.0, 10.0).unwrap();
        let controlled = optimal_controlled_precision(&p, 1024.0).unwrap();
        let uncontrolled = uncontrolled_precision(&p).unwrap();
        assert!(controlled.cost < uncontrolled.cost);
    }

    #[test]
    fn practical_with_exact_estimates_reproduces_optimal() {
        let p = RotatingFieldParams::new(1.0, 0.8, 1.5).unwrap();
        let a = optimal_controlled_precision(&p, 2048.0).unwrap();
        let b = practical_precision(&p, &ControlEstimates::exact(&p), 2048.0).unwrap();
        for k in 0..2 {
            assert!((a.variances[k] - b.variances[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn practical_variances_match_estimates_at_symmetric_detuning() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        let est = ControlEstimates::new(1.01, 1.01).unwrap();
        let rep = practical_precision(&p, &est, DEFAULT_STEPS_PER_UNIT).unwrap();
        let (dw2, db2) = practical_variance_estimates(&p, 0.01, 0.01);
        assert!((rep.variances[PARAM_FREQUENCY] / dw2 - 1.0).abs() < 1e-3);
        assert!((rep.variances[PARAM_FIELD] / db2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn expansion_generators_match_pipeline_to_third_order() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        let est = ControlEstimates::new(1.01, 1.01).unwrap();
        let op = practical_total_hamiltonian(&p, &est);
        let grid = PropagationGrid::from_resolution(0.0, 1.0, 8192.0).unwrap();
        let numeric = evolve::generators(&op, &grid).unwrap();
        let expansion = expansion_generators(&p, 0.01, 0.01).unwrap();
        for k in 0..2 {
            let diff = numeric.matrices[k].max_diff(&expansion.matrices[k]);
            assert!(diff < 5e-5, "param {k}: {diff:.2e}");
        }
    }

    #[test]
    fn expansion_first_derivatives_match_finite_differences() {
        // Central finite differences of the numeric pipeline over δB and δω
        // pin every first-order coefficient of the expansion.
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        let eps = 1e-4;
        let gens = |db: f64, dw: f64| {
            let est = ControlEstimates::new(p.field + db, p.frequency + dw).unwrap();
            evolve::generators(
                &practical_total_hamiltonian(&p, &est),
                &PropagationGrid::from_resolution(0.0, 1.0, 4096.0).unwrap(),
            )
            .unwrap()
        };
        let plus_w = gens(0.0, eps);
        let minus_w = gens(0.0, -eps);
        let plus_b = gens(eps, 0.0);
        let minus_b = gens(-eps, 0.0);

        let fd = |a: &GeneratorSet, b: &GeneratorSet, k: usize| {
            (&a.matrices[k] - &b.matrices[k]).scale_re(1.0 / (2.0 * eps))
        };
        let ops = spin::spin1();
        // ∂_{ω_c}ℋ_ω = -(BT³/3)·J_X
        assert!(
            fd(&plus_w, &minus_w, PARAM_FREQUENCY).max_diff(&ops.jx.scale_re(-1.0 / 3.0)) < 1e-6
        );
        // ∂_{B_c}ℋ_ω = -(BT³/3)·J_Y
        assert!(
            fd(&plus_b, &minus_b, PARAM_FREQUENCY).max_diff(&ops.jy.scale_re(-1.0 / 3.0)) < 1e-6
        );
        // ∂_{ω_c}ℋ_B = BT³/6·J_Y + T²/2·J_Z
        let want = &ops.jy.scale_re(1.0 / 6.0) + &ops.jz.scale_re(0.5);
        assert!(fd(&plus_w, &minus_w, PARAM_FIELD).max_diff(&want) < 1e-6);
        // ∂_{B_c}ℋ_B = 0
        assert!(fd(&plus_b, &minus_b, PARAM_FIELD).max_norm() < 1e-6);
    }

    #[test]
    fn expansion_qfi_special_values() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        // δ = 0 → diag(4T², B²T⁴)
        let f = expansion_qfi(&p, 0.0, 0.0).unwrap();
        assert_eq!(f.get(0, 0), 4.0);
        assert_eq!(f.get(1, 1), 1.0);
        assert_eq!(f.get(0, 1), 0.0);
        // first-order cross term at δB = 0: F_ωB = BT⁴δω/3
        let f = expansion_qfi(&p, 0.0, 0.01).unwrap();
        assert!((f.get(0, 1) - 0.01 / 3.0).abs() < 1e-15);
        // out-of-range detuning is rejected
        assert!(expansion_qfi(&p, 0.2, 0.0).is_err());
    }

    #[test]
    fn expansion_qfi_matches_numeric_pipeline() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        let est = ControlEstimates::new(1.01, 1.01).unwrap();
        let rep = practical_precision(&p, &est, DEFAULT_STEPS_PER_UNIT).unwrap();
        let f = expansion_qfi(&p, 0.01, 0.01).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!(
                    (rep.qfi.get(a, b) - f.get(a, b)).abs() < 5e-5,
                    "({a},{b}): {} vs {}",
                    rep.qfi.get(a, b),
                    f.get(a, b)
                );
            }
        }
        // variances against the numeric pipeline, relative
        let (dw2, db2) = practical_variance_estimates(&p, 0.01, 0.01);
        assert!((rep.variances[PARAM_FREQUENCY] / dw2 - 1.0).abs() < 1e-3);
        assert!((rep.variances[PARAM_FIELD] / db2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn practical_cost_asymmetry_is_third_order() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        let cost = |d: f64| {
            let est = ControlEstimates::new(1.0 + d, 1.0 + d).unwrap();
            practical_precision(&p, &est, 2048.0).unwrap().cost
        };
        let mut ratios = Vec::new();
        for &d in &[0.01, 0.02, 0.04] {
            ratios.push((cost(d) - cost(-d)) / d.powi(3));
        }
        // cost(δ) - cost(-δ) = c·δ³ + O(δ⁵): the cubic coefficient is stable
        for r in &ratios {
            assert!(
                (r - ratios[0]).abs() < 0.05 * ratios[0].abs().max(0.1),
                "ratios {ratios:?}"
            );
        }
    }

    #[test]
    fn optimal_generator_invariant_20_random_parameter_sets() {
        let ops = spin::spin1();
        for k in 0..20u64 {
            let b = 0.2 + 4.8 * rng::uniform(300, k, 0);
            let w = 5.0 * rng::uniform(300, k, 1);
            let t = 0.5 + 4.5 * rng::uniform(300, k, 2);
            let p = RotatingFieldParams::new(b, w, t).unwrap();
            let op = optimal_total_hamiltonian(&p);
            let grid = PropagationGrid::from_resolution(0.0, t, 1024.0).unwrap();
            let gens = evolve::generators(&op, &grid).unwrap();
            assert!(
                gens.matrices[PARAM_FIELD].max_diff(&ops.jx.scale_re(-t)) < 1e-6,
                "set {k}"
            );
            assert!(
                gens.matrices[PARAM_FREQUENCY].max_diff(&ops.jz.scale_re(-b / 2.0 * t * t)) < 1e-6,
                "set {k}"
            );
        }
    }

    #[test]
    fn feedback_analytic_values() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        // N = 100: Δ²ω = 1/(1 - 5·2/1600) = 1/(1 - 0.00625)
        let fb = feedback_precision(&p, 100, FeedbackMode::Analytic).unwrap();
        assert!((fb.omega_variance - 1.0 / (1.0 - 0.00625)).abs() < 1e-15);
        // N → ∞ approaches the optimally-controlled values
        let fb = feedback_precision(&p, 10_000_000, FeedbackMode::Analytic).unwrap();
        assert!((fb.omega_variance - 1.0).abs() < 1e-4);
        assert!((fb.field_variance - 0.25).abs() < 1e-4);
        // too few rounds → regime violation, not a number
        // (B = 1, ω = 3: the Δ²ω bracket at N = 1 is 1 - 50/16 < 0)
        let wide = RotatingFieldParams::new(1.0, 3.0, 1.0).unwrap();
        assert!(matches!(
            feedback_precision(&wide, 1, FeedbackMode::Analytic),
            Err(Error::RegimeViolation(_))
        ));
    }

    #[test]
    fn feedback_threshold_brings_both_variances_close() {
        for (b, w, t) in [(1.0, 1.0, 1.0), (0.5, 2.0, 3.0), (2.0, 0.3, 0.7)] {
            let p = RotatingFieldParams::new(b, w, t).unwrap();
            let n = (10.0 * feedback_threshold_rounds(&p)).ceil() as u64;
            let fb = feedback_precision(&p, n, FeedbackMode::Analytic).unwrap();
            let w_opt = 1.0 / (b * b * t.powi(4));
            let b_opt = 1.0 / (4.0 * t * t);
            assert!((fb.omega_variance / w_opt - 1.0).abs() < 0.15);
            assert!((fb.field_variance / b_opt - 1.0).abs() < 0.15);
        }
    }

    #[test]
    fn feedback_monte_carlo_is_deterministic_and_validated() {
        let p = RotatingFieldParams::new(1.0, 1.0, 1.0).unwrap();
        let mode = FeedbackMode::MonteCarlo {
            samples: 20_000,
            seed: 11,
        };
        let a = feedback_precision(&p, 50, mode).unwrap();
        let b = feedback_precision(&p, 50, mode).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            feedback_precision(
                &p,
                50,
                FeedbackMode::MonteCarlo {
                    samples: 10,
                    seed: 0
                }
            ),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn probe_state_saturates_uncontrolled_pair() {
        let p = RotatingFieldParams::new(1.0, 1.0, 100.0).unwrap();
        let psi = spin::rotating_field_probe(p.field, p.frequency, p.duration).unwrap();
        let gens = closed_generators(&p).unwrap();
        let comm = crate::linalg::commutator(&gens.matrices[0], &gens.matrices[1]).unwrap();
        assert!(expect(&psi, &comm).unwrap().norm() < 1e-10);
    }
}
