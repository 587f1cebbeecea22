//! Spin-1 operator algebra and probe states.
//!
//! Basis ordering is fixed to (m = +1, 0, -1) so that jz = diag(1, 0, -1);
//! ħ = 1 throughout.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{expm_i, CMatrix, StateVector};

/// The three spin-1 angular momentum matrices.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
}

/// Standard spin-1 matrices in the Z basis.
pub fn spin1() -> SpinOps {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let o = C64::new(0.0, 0.0);
    let r = C64::new(s, 0.0);
    let i = C64::new(0.0, s);

    let jx = CMatrix::from_rows(&[&[o, r, o], &[r, o, r], &[o, r, o]]);
    let jy = CMatrix::from_rows(&[&[o, -i, o], &[i, o, -i], &[o, i, o]]);
    let jz = CMatrix::diag(&[1.0, 0.0, -1.0]);
    SpinOps { jx, jy, jz }
}

/// Tilted in-plane operators: J_n = cosθ·J_x + sinθ·J_y and its orthogonal
/// partner J_n⊥ = -sinθ·J_x + cosθ·J_y.
pub fn tilted(theta: f64) -> (CMatrix, CMatrix) {
    let ops = spin1();
    let jn = &ops.jx.scale_re(theta.cos()) + &ops.jy.scale_re(theta.sin());
    let jnp = &ops.jx.scale_re(-theta.sin()) + &ops.jy.scale_re(theta.cos());
    (jn, jnp)
}

/// Real combination x·J_X + y·J_Y + z·J_Z.
pub fn axis_combination(x: f64, y: f64, z: f64) -> CMatrix {
    let ops = spin1();
    &(&ops.jx.scale_re(x) + &ops.jy.scale_re(y)) + &ops.jz.scale_re(z)
}

/// (|-1⟩_Z + |+1⟩_Z)/√2.
pub fn plus_minus_state() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)])
        .expect("normalized by construction")
}

/// Probe state that attains the uncontrolled two-parameter precision limit of
/// the rotating-field family:
/// exp(iθJ_Z)·exp[i(π/2 - √(B²+ω²)·T)·J_X]·(|-1⟩_Z + |+1⟩_Z)/√2
/// with θ = arctan(ω/B).
pub fn rotating_field_probe(field: f64, frequency: f64, duration: f64) -> Result<StateVector> {
    if !(field > 0.0) {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: format!("must be positive, got {field}"),
        });
    }
    let ops = spin1();
    let omega_total = field.hypot(frequency);
    let theta = frequency.atan2(field);
    let chi = std::f64::consts::FRAC_PI_2 - omega_total * duration;
    // expm_i(A, s) = exp(-i s A), so e^{+iθ J_Z} = expm_i(jz, -θ).
    let rot_x = expm_i(&ops.jx, -chi)?;
    let rot_z = expm_i(&ops.jz, -theta)?;
    let psi = plus_minus_state().apply(&rot_x)?.apply(&rot_z)?;
    StateVector::new(psi.amplitudes().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, eig_hermitian, expect};
    use crate::rng;

    #[test]
    fn spin1_matrices_and_spectra() {
        let ops = spin1();
        for m in [&ops.jx, &ops.jy, &ops.jz] {
            assert!(m.hermiticity_deviation() < 1e-15);
            let eig = eig_hermitian(m).unwrap();
            for (got, want) in eig.values.iter().zip([-1.0, 0.0, 1.0]) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutation_relations() {
        let ops = spin1();
        let i = C64::new(0.0, 1.0);
        let pairs = [
            (&ops.jx, &ops.jy, &ops.jz),
            (&ops.jy, &ops.jz, &ops.jx),
            (&ops.jz, &ops.jx, &ops.jy),
        ];
        for (a, b, c) in pairs {
            let lhs = commutator(a, b).unwrap();
            assert!(lhs.max_diff(&c.scale(i)) < 1e-12);
        }
    }

    #[test]
    fn casimir_identity() {
        let ops = spin1();
        let sum = &(&ops.jx.matmul(&ops.jx) + &ops.jy.matmul(&ops.jy)) + &ops.jz.matmul(&ops.jz);
        assert!(sum.max_diff(&CMatrix::identity(3).scale_re(2.0)) < 1e-14);
    }

    #[test]
    fn tilted_special_angles_and_casimir() {
        let ops = spin1();
        let (jn, jnp) = tilted(0.0);
        assert!(jn.max_diff(&ops.jx) < 1e-15);
        assert!(jnp.max_diff(&ops.jy) < 1e-15);
        let (jn, jnp) = tilted(std::f64::consts::FRAC_PI_2);
        assert!(jn.max_diff(&ops.jy) < 1e-15);
        assert!(jnp.max_diff(&ops.jx.scale_re(-1.0)) < 1e-15);

        for k in 0..12u64 {
            let theta = 4.0 * std::f64::consts::PI * (rng::uniform(21, k, 0) - 0.5);
            let (jn, jnp) = tilted(theta);
            let sum = &(&jn.matmul(&jn) + &jnp.matmul(&jnp)) + &ops.jz.matmul(&ops.jz);
            assert!(sum.max_diff(&CMatrix::identity(3).scale_re(2.0)) < 1e-13);
        }
    }

    #[test]
    fn plus_minus_state_moments() {
        let ops = spin1();
        let psi = plus_minus_state();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert!(expect(&psi, &ops.jz).unwrap().norm() < 1e-15);
        assert!(expect(&psi, &ops.jy).unwrap().norm() < 1e-15);
        assert!(expect(&psi, &ops.jx).unwrap().norm() < 1e-15);
    }

    #[test]
    fn probe_state_norm_and_reduction() {
        // ω=0 and √(B²)·T = π/2 make both rotation angles vanish.
        let b = 2.0;
        let t = std::f64::consts::FRAC_PI_2 / b;
        let psi = rotating_field_probe(b, 0.0, t).unwrap();
        assert!(psi.inner(&plus_minus_state()).norm() > 1.0 - 1e-12);

        let psi = rotating_field_probe(1.0, 1.0, 100.0).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);

        assert!(rotating_field_probe(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rotation_identities_100_angles() {
        // exp(iφJ_Y) J_X exp(-iφJ_Y) = cosφ J_X + sinφ J_Z
        // exp(iφJ_Z) J_X exp(-iφJ_Z) = cosφ J_X - sinφ J_Y
        let ops = spin1();
        for k in 0..100u64 {
            let phi = 4.0 * std::f64::consts::PI * (rng::uniform(77, k, 0) - 0.5);
            let uy = expm_i(&ops.jy, -phi).unwrap();
            let lhs = uy.matmul(&ops.jx).matmul(&uy.adjoint());
            let rhs = &ops.jx.scale_re(phi.cos()) + &ops.jz.scale_re(phi.sin());
            assert!(lhs.max_diff(&rhs) < 1e-11, "Y identity at φ = {phi}");

            let uz = expm_i(&ops.jz, -phi).unwrap();
            let lhs = uz.matmul(&ops.jx).matmul(&uz.adjoint());
            let rhs = &ops.jx.scale_re(phi.cos()) - &ops.jy.scale_re(phi.sin());
            assert!(lhs.max_diff(&rhs) < 1e-11, "Z identity at φ = {phi}");
        }
    }
}
