//! Coherent control construction.
//!
//! A parameter's optimal control cancels the bare Hamiltonian and adds the
//! counter-diabatic term of the instantaneous eigenbasis of ∂_mH(t). With
//! several parameters the counter-diabatic terms generally differ, and a
//! real weight γ_m blends them; the cancelled -H(t) part is always present,
//! so the total propagated Hamiltonian is the weighted sum of the
//! counter-diabatic terms plus an optional gauge term.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolve::{OperatorFn, TimeDepOperator};
use crate::linalg::{eig_hermitian, CMatrix};

/// Minimum eigenvalue gap accepted by the numeric counter-diabatic path.
pub const DEGENERACY_GAP_TOL: f64 = 1e-8;

/// Matching tolerance used to recognize coinciding counter-diabatic terms.
const SHARED_TERM_TOL: f64 = 1e-9;

/// Default central-difference probe width for ∂_t at time t.
pub fn default_dt_probe(t: f64) -> f64 {
    1e-6 * t.abs().max(1.0)
}

pub type GaugeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Variational weights γ_m and optional gauge functions f_k(t).
///
/// The gauge functions multiply the instantaneous eigenprojectors of the
/// first parameter's gradient family, indexed by ascending eigenvalue; they
/// default to zero.
#[derive(Clone, Default)]
pub struct ControlSpec {
    pub gammas: Vec<f64>,
    pub gauge_fns: Option<Vec<GaugeFn>>,
}

impl ControlSpec {
    pub fn uniform(gamma: f64, n_params: usize) -> Self {
        Self {
            gammas: vec![gamma; n_params],
            gauge_fns: None,
        }
    }
}

/// Counter-diabatic term of a gradient family at time t:
///
/// K(t) = i·Σ_{k≠l} P_k·(∂_t grad)·P_l / (a_l - a_k)
///
/// with P_k the instantaneous eigenprojectors of grad(t) and ∂_t grad taken by
/// central finite difference over `dt_probe`. The diagonal (Berry-connection)
/// part is zero by construction: parallel-transport gauge. The result is
/// Hermitian and traceless.
pub fn counterdiabatic_term<F>(grad: F, t: f64, dt_probe: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let a = grad(t)?;
    a.assert_hermitian("counterdiabatic_term input")?;
    let eig = eig_hermitian(&a)?;
    let n = a.dim();
    for k in 0..n - 1 {
        let gap = eig.values[k + 1] - eig.values[k];
        if gap < DEGENERACY_GAP_TOL {
            return Err(Error::DegenerateSpectrum {
                t,
                gap,
                tol: DEGENERACY_GAP_TOL,
            });
        }
    }
    let fwd = grad(t + dt_probe)?;
    let bwd = grad(t - dt_probe)?;
    let da = (&fwd - &bwd).scale_re(1.0 / (2.0 * dt_probe));

    // Work in the eigenbasis: K̃_kl = i·(V† ∂A V)_kl / (a_l - a_k), k ≠ l.
    let v = &eig.vectors;
    let da_eig = v.adjoint().matmul(&da).matmul(v);
    let mut k_eig = CMatrix::zeros(n);
    let i = C64::new(0.0, 1.0);
    for kk in 0..n {
        for ll in 0..n {
            if kk == ll {
                continue;
            }
            k_eig[(kk, ll)] = i * da_eig[(kk, ll)] / (eig.values[ll] - eig.values[kk]);
        }
    }
    let k = v.matmul(&k_eig).matmul(&v.adjoint()).hermitized();
    debug_assert!(k.trace().norm() < 1e-9);
    Ok(k)
}

/// Builds the totally controlled Hamiltonian family
///
/// H_total(t) = Σ_k f_k(t)·P_k(t) + Σ_m γ_m·K_m(t)
///
/// (the -H(t) part of the control has already cancelled the bare term), with
/// the target's parameter gradients attached unchanged; they are what the
/// sensitivity generators integrate.
///
/// Counter-diabatic terms that coincide pointwise (within 1e-9) and carry the
/// same weight are entered once, not once per parameter, so that equal-weight
/// shared control reduces to the single shared term.
pub fn control_hamiltonian(
    target: &TimeDepOperator,
    spec: &ControlSpec,
) -> Result<TimeDepOperator> {
    let n_params = target.params().len();
    if spec.gammas.len() != n_params {
        return Err(Error::DimMismatch {
            left: spec.gammas.len(),
            right: n_params,
            what: "control weights vs target params",
        });
    }
    if let Some(fks) = &spec.gauge_fns {
        if fks.len() != target.dim() {
            return Err(Error::DimMismatch {
                left: fks.len(),
                right: target.dim(),
                what: "gauge functions vs dimension",
            });
        }
    }
    let grads: Vec<OperatorFn> = (0..n_params).map(|m| target.gradient_fn(m)).collect();
    let gammas = spec.gammas.clone();
    let gauge_fns = spec.gauge_fns.clone();
    let dim = target.dim();

    let hamiltonian: OperatorFn = Arc::new(move |t| {
        let dt = default_dt_probe(t);
        let mut terms: Vec<(CMatrix, f64)> = Vec::with_capacity(gammas.len());
        for (m, grad) in grads.iter().enumerate() {
            let k = counterdiabatic_term(|s| grad(s), t, dt)?;
            let shared = terms.iter().any(|(prev, gamma)| {
                *gamma == gammas[m] && prev.max_diff(&k) <= SHARED_TERM_TOL * (1.0 + k.max_norm())
            });
            if !shared {
                terms.push((k, gammas[m]));
            }
        }
        let mut total = CMatrix::zeros(dim);
        for (k, gamma) in &terms {
            total = &total + &k.scale_re(*gamma);
        }
        if let Some(fks) = &gauge_fns {
            let a = grads[0](t)?;
            let eig = eig_hermitian(&a)?;
            for (k, fk) in fks.iter().enumerate() {
                let fval = fk(t);
                if fval == 0.0 {
                    continue;
                }
                let col = eig.vector(k);
                let mut proj = CMatrix::zeros(dim);
                for r in 0..dim {
                    for c in 0..dim {
                        proj[(r, c)] = col[r] * col[c].conj();
                    }
                }
                total = &total + &proj.scale_re(fval);
            }
        }
        Ok(total.hermitized())
    });

    Ok(target.with_hamiltonian(hamiltonian))
}
