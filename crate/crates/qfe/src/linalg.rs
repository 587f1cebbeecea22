//! Dense complex linear algebra for small Hermitian systems.
//!
//! Everything here targets the d ≤ 8 regime (d = 3 in practice): matrices are
//! plain row-major `Vec<Complex64>`, the eigensolver is cyclic Jacobi, and the
//! matrix exponential goes through the spectral decomposition so unitarity is
//! tight by construction.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance on inputs (max |A - A†| entry).
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigen-residual tolerance guaranteed by [`eig_hermitian`] for d ≤ 8.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dim must be >= 1");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (k, &e) in entries.iter().enumerate() {
            m[(k, k)] = C64::new(e, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self[(k, k)]).sum()
    }

    /// Max absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-entry distance to another matrix.
    pub fn max_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "max_diff dims");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max |A - A†| over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn assert_hermitian(&self, context: &str) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation,
                tol: HERMITICITY_TOL,
                context: context.to_string(),
            });
        }
        Ok(())
    }

    /// Symmetrized copy (A + A†)/2; removes rounding-level drift.
    pub fn hermitized(&self) -> Self {
        (self + &self.adjoint()).scale_re(0.5)
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matmul dims");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "mul_vec dims");
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Deviation of U from unitarity, max |U†U - I|.
    pub fn unitarity_deviation(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_diff(&CMatrix::identity(self.dim))
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "add dims");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dims");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Normalized complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Builds a state from amplitudes, requiring |‖ψ‖² - 1| ≤ 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: format!("state not normalized: |psi|^2 = {norm_sqr}"),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Builds a state from arbitrary amplitudes by normalizing them.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: "zero vector cannot be normalized".into(),
            });
        }
        Ok(Self {
            amplitudes: amplitudes.iter().map(|a| a / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies a matrix, renormalization is the caller's business.
    pub fn apply(&self, m: &CMatrix) -> Result<StateVector> {
        if m.dim() != self.dim() {
            return Err(Error::DimMismatch {
                left: m.dim(),
                right: self.dim(),
                what: "apply",
            });
        }
        Ok(StateVector {
            amplitudes: m.mul_vec(&self.amplitudes),
        })
    }

    /// Multiplies by the global phase e^{iχ}.
    pub fn with_phase(&self, chi: f64) -> StateVector {
        let p = C64::from_polar(1.0, chi);
        StateVector {
            amplitudes: self.amplitudes.iter().map(|a| a * p).collect(),
        }
    }
}

/// ⟨ψ|A|ψ⟩. Real within 1e-12 (imaginary part) when A is Hermitian.
pub fn expect(psi: &StateVector, a: &CMatrix) -> Result<C64> {
    if a.dim() != psi.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: psi.dim(),
            what: "expect",
        });
    }
    let av = a.mul_vec(psi.amplitudes());
    Ok(psi
        .amplitudes()
        .iter()
        .zip(av.iter())
        .map(|(p, q)| p.conj() * q)
        .sum())
}

/// AB - BA.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
            what: "commutator",
        });
    }
    Ok(&a.matmul(b) - &b.matmul(a))
}

/// AB + BA.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
            what: "anticommutator",
        });
    }
    Ok(&a.matmul(b) + &b.matmul(a))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column k belongs to `values[k]`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim())
            .map(|r| self.vectors[(r, k)])
            .collect()
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Deterministic sweep order (row-major over the strict upper triangle), so
/// results are reproducible bit-for-bit per platform. Eigenvalues come back in
/// ascending order; each eigenvector is gauge-fixed so that its
/// largest-magnitude component is real and positive.
pub fn eig_hermitian(a: &CMatrix) -> Result<Eigen> {
    a.assert_hermitian("eig_hermitian input")?;
    let n = a.dim();
    let mut m = a.hermitized();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(1e-300);
    let tol = 1e-15 * scale;

    let off_norm = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * m[(p, q)].norm_sqr();
            }
        }
        s.sqrt()
    };

    const MAX_SWEEPS: usize = 100;
    let mut sweeps = 0;
    while off_norm(&m) > tol {
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps: MAX_SWEEPS,
                off_norm: off_norm(&m),
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G differs from identity in the (p,q) plane:
                //   G[pp] = c, G[pq] = s*phase, G[qp] = -s*conj(phase), G[qq] = c
                // m <- G† m G, v <- v G
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - mkq * s * phase.conj();
                    m[(k, q)] = mkp * s * phase + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - mqk * s * phase;
                    m[(q, k)] = mpk * s * phase.conj() + mqk * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s * phase.conj();
                    v[(k, q)] = vkp * s * phase + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());

    let values: Vec<f64> = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        // Gauge: rotate so the largest-magnitude component is real positive.
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for row in 0..n {
            let mag = v[(row, k)].norm();
            if mag > best_mag + 1e-15 {
                best_mag = mag;
                best = row;
            }
        }
        let g = if best_mag > 1e-300 {
            let z = v[(best, k)];
            (z / z.norm()).conj()
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..n {
            vectors[(row, col)] = v[(row, k)] * g;
        }
    }

    Ok(Eigen { values, vectors })
}

/// exp(-i·s·A) for Hermitian A, through the spectral decomposition.
///
/// Unitary within 1e-12 for any |s| that keeps s·λ finite.
pub fn expm_i(a: &CMatrix, s: f64) -> Result<CMatrix> {
    let eig = eig_hermitian(a)?;
    let n = a.dim();
    let mut out = CMatrix::zeros(n);
    // V diag(e^{-i s λ}) V†
    for r in 0..n {
        for c in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let ph = C64::from_polar(1.0, -s * eig.values[k]);
                acc += eig.vectors[(r, k)] * ph * eig.vectors[(c, k)].conj();
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::spin;

    fn random_hermitian(seed: u64, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim);
        let mut idx = 0;
        for r in 0..dim {
            for c in r..dim {
                let re = 2.0 * rng::uniform(seed, idx, 0) - 1.0;
                let im = 2.0 * rng::uniform(seed, idx, 1) - 1.0;
                idx += 1;
                if r == c {
                    m[(r, c)] = C64::new(re, 0.0);
                } else {
                    m[(r, c)] = C64::new(re, im);
                    m[(c, r)] = C64::new(re, -im);
                }
            }
        }
        m
    }

    #[test]
    fn eig_diagonal_matrix() {
        let a = CMatrix::diag(&[1.0, 2.0, 3.0]);
        let eig = eig_hermitian(&a).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
        assert!(eig.vectors.max_diff(&CMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn eig_spin1_jx_spectrum() {
        let ops = spin::spin1();
        let eig = eig_hermitian(&ops.jx).unwrap();
        for (got, want) in eig.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12, "evals {:?}", eig.values);
        }
    }

    #[test]
    fn eig_reconstruction_random() {
        for seed in 0..20u64 {
            let a = random_hermitian(seed, 3);
            let eig = eig_hermitian(&a).unwrap();
            // V diag(λ) V† = A
            let mut rec = CMatrix::zeros(3);
            for r in 0..3 {
                for c in 0..3 {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..3 {
                        acc += eig.vectors[(r, k)] * eig.values[k] * eig.vectors[(c, k)].conj();
                    }
                    rec[(r, c)] = acc;
                }
            }
            assert!(rec.max_diff(&a) < 1e-10, "seed {seed}");
            assert!(eig.vectors.unitarity_deviation() < 1e-12);
            // eigenvalue sum equals the trace
            let sum: f64 = eig.values.iter().sum();
            assert!((sum - a.trace().re).abs() < 1e-10);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = CMatrix::zeros(2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        match eig_hermitian(&a) {
            Err(Error::NotHermitian { deviation, .. }) => assert!(deviation > 0.5),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn expm_zero_exponent_is_identity() {
        let a = random_hermitian(7, 3);
        let u = expm_i(&a, 0.0).unwrap();
        assert!(u.max_diff(&CMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn expm_jz_pi() {
        // exp(iπ J_Z) = diag(-1, 1, -1) in the (m=1,0,-1) ordering
        let ops = spin::spin1();
        let u = expm_i(&ops.jz, -std::f64::consts::PI).unwrap();
        let want = CMatrix::diag(&[-1.0, 1.0, -1.0]);
        assert!(u.max_diff(&want) < 1e-12);
    }

    #[test]
    fn expm_rotation_identity_random_angle() {
        // exp(iφ J_Y) J_X exp(-iφ J_Y) = cosφ J_X + sinφ J_Z
        let ops = spin::spin1();
        for k in 0..10u64 {
            let phi = 4.0 * std::f64::consts::PI * (rng::uniform(99, k, 0) - 0.5);
            let left = expm_i(&ops.jy, -phi)
                .unwrap()
                .matmul(&ops.jx)
                .matmul(&expm_i(&ops.jy, phi).unwrap());
            let right = &ops.jx.scale_re(phi.cos()) + &ops.jz.scale_re(phi.sin());
            assert!(left.max_diff(&right) < 1e-12);
        }
    }

    #[test]
    fn expm_unitarity_large_exponent() {
        for seed in 0..10u64 {
            let a = random_hermitian(seed + 100, 3);
            let s = 1e3 * (2.0 * rng::uniform(seed, 0, 2) - 1.0);
            let u = expm_i(&a, s).unwrap();
            assert!(u.unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn commutator_examples() {
        let ops = spin::spin1();
        let i = C64::new(0.0, 1.0);
        // [J_X, J_Y] = i J_Z and cyclic
        assert!(
            commutator(&ops.jx, &ops.jy)
                .unwrap()
                .max_diff(&ops.jz.scale(i))
                < 1e-14
        );
        assert!(
            commutator(&ops.jy, &ops.jz)
                .unwrap()
                .max_diff(&ops.jx.scale(i))
                < 1e-14
        );
        // [A, A] = 0
        let a = random_hermitian(3, 3);
        assert!(commutator(&a, &a).unwrap().max_norm() < 1e-14);
        // anti-Hermitian for Hermitian inputs
        let b = random_hermitian(4, 3);
        let c = commutator(&a, &b).unwrap();
        assert!(c.max_diff(&c.adjoint().scale_re(-1.0)) < 1e-12);
    }

    #[test]
    fn commutator_dim_mismatch() {
        let a = CMatrix::identity(2);
        let b = CMatrix::identity(3);
        assert!(matches!(commutator(&a, &b), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn expect_examples() {
        let ops = spin::spin1();
        let psi = spin::plus_minus_state();
        let jx2 = ops.jx.matmul(&ops.jx);
        assert!(expect(&psi, &ops.jx).unwrap().norm() < 1e-14);
        assert!((expect(&psi, &jx2).unwrap().re - 1.0).abs() < 1e-14);
        assert!((expect(&psi, &CMatrix::identity(3)).unwrap().re - 1.0).abs() < 1e-14);
        // real for Hermitian input
        let a = random_hermitian(11, 3);
        assert!(expect(&psi, &a).unwrap().im.abs() < 1e-12);
    }
}
