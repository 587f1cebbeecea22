//! Fisher-matrix assembly, Cramér–Rao cost, and saturation diagnostics.
//!
//! For a pure probe |ψ₀⟩ and generators ℋ_m the Fisher matrix is
//!
//!   F_αβ = 4·( ⟨ψ₀|{ℋ_α, ℋ_β}|ψ₀⟩/2 − ⟨ψ₀|ℋ_α|ψ₀⟩·⟨ψ₀|ℋ_β|ψ₀⟩ )
//!
//! and the multi-parameter bound Cov ≥ F⁻¹ is attainable when every pair
//! satisfies ⟨ψ₀|[ℋ_α, ℋ_β]|ψ₀⟩ = 0.

use crate::error::{Error, Result};
use crate::evolve::GeneratorSet;
use crate::linalg::{anticommutator, commutator, eig_hermitian, expect, CMatrix, StateVector};

/// Condition-number guard for Fisher inversion.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Relative residual threshold for the "bound attainable" flag.
pub const SATURATION_REL_TOL: f64 = 1e-8;

/// Real symmetric Fisher matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl QfiMatrix {
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.n + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn as_cmatrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                m[(a, b)] = num_complex::Complex64::new(self.get(a, b), 0.0);
            }
        }
        m
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eig_hermitian(&self.as_cmatrix())?.values)
    }

    /// Inverse through the spectral decomposition, guarded by the condition
    /// number; 2×2 in closed form.
    pub fn inverse(&self) -> Result<QfiMatrix> {
        if self.n == 1 {
            let f = self.get(0, 0);
            if f.abs() < 1e-300 {
                return Err(Error::SingularFisher {
                    cond: f64::INFINITY,
                    null_direction: vec![1.0],
                });
            }
            return Ok(QfiMatrix::from_entries(1, vec![1.0 / f]));
        }
        if self.n == 2 {
            let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
            let det = a * c - b * b;
            let tr = a + c;
            // eigenvalues of the symmetric 2×2
            let disc = ((a - c) * (a - c) / 4.0 + b * b).sqrt();
            let lam_max = (tr / 2.0 + disc).abs();
            let lam_min = (tr / 2.0 - disc).abs();
            if lam_min < lam_max / CONDITION_LIMIT || det == 0.0 {
                let mid = tr / 2.0 - disc;
                let dir = if b.abs() > 1e-300 {
                    let v = [b, mid - a];
                    let n = v[0].hypot(v[1]);
                    vec![v[0] / n, v[1] / n]
                } else if a <= c {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                };
                return Err(Error::SingularFisher {
                    cond: if lam_min > 0.0 {
                        lam_max / lam_min
                    } else {
                        f64::INFINITY
                    },
                    null_direction: dir,
                });
            }
            return Ok(QfiMatrix::from_entries(
                2,
                vec![c / det, -b / det, -b / det, a / det],
            ));
        }
        let eig = eig_hermitian(&self.as_cmatrix())?;
        let lam_max = eig.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        let (k_min, lam_min) = eig
            .values
            .iter()
            .enumerate()
            .map(|(k, &l)| (k, l.abs()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if lam_min < lam_max / CONDITION_LIMIT {
            let dir = eig.vector(k_min).iter().map(|z| z.re).collect();
            return Err(Error::SingularFisher {
                cond: if lam_min > 0.0 {
                    lam_max / lam_min
                } else {
                    f64::INFINITY
                },
                null_direction: dir,
            });
        }
        let mut entries = vec![0.0; self.n * self.n];
        for a in 0..self.n {
            for b in 0..self.n {
                let mut acc = 0.0;
                for k in 0..self.n {
                    acc += eig.vectors[(a, k)].re * eig.vectors[(b, k)].re / eig.values[k];
                }
                entries[a * self.n + b] = acc;
            }
        }
        Ok(QfiMatrix::from_entries(self.n, entries))
    }
}

/// Positive-definite cost weights G.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for k in 0..n {
            entries[k * n + k] = 1.0;
        }
        Self { n, entries }
    }

    /// Validates symmetry and positive definiteness.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimMismatch {
                left: entries.len(),
                right: n * n,
                what: "cost matrix entries",
            });
        }
        for a in 0..n {
            for b in 0..n {
                if (entries[a * n + b] - entries[b * n + a]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter {
                        name: "cost_matrix",
                        reason: "not symmetric".into(),
                    });
                }
            }
        }
        let probe = QfiMatrix::from_entries(n, entries.clone());
        let evals = probe.eigenvalues()?;
        if evals.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "cost_matrix",
                reason: format!("not positive definite, eigenvalues {evals:?}"),
            });
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.n + b]
    }
}

/// Fisher matrix of a pure probe state against a generator set.
pub fn qfi_matrix(psi: &StateVector, gens: &GeneratorSet) -> Result<QfiMatrix> {
    let n = gens.len();
    let mut means = Vec::with_capacity(n);
    for m in &gens.matrices {
        if m.dim() != psi.dim() {
            return Err(Error::DimMismatch {
                left: m.dim(),
                right: psi.dim(),
                what: "qfi_matrix",
            });
        }
        means.push(expect(psi, m)?.re);
    }
    let mut entries = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let anti = anticommutator(&gens.matrices[a], &gens.matrices[b])?;
            let sym = expect(psi, &anti)?.re / 2.0;
            let f = 4.0 * (sym - means[a] * means[b]);
            entries[a * n + b] = f;
            entries[b * n + a] = f;
        }
    }
    Ok(QfiMatrix::from_entries(n, entries))
}

/// max over pairs α<β of |⟨ψ₀|[ℋ_α, ℋ_β]|ψ₀⟩|. Zero means the bound is
/// attainable.
pub fn saturation_residual(psi: &StateVector, gens: &GeneratorSet) -> Result<f64> {
    let n = gens.len();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            let comm = commutator(&gens.matrices[a], &gens.matrices[b])?;
            worst = worst.max(expect(psi, &comm)?.norm());
        }
    }
    Ok(worst)
}

/// Whether the residual is negligible relative to the generator scales.
pub fn saturation_flag(residual: f64, gens: &GeneratorSet) -> bool {
    let n = gens.len();
    if n < 2 {
        return true;
    }
    let mut scale = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            scale =
                scale.max(gens.matrices[a].frobenius_norm() * gens.matrices[b].frobenius_norm());
        }
    }
    residual <= SATURATION_REL_TOL * scale.max(f64::MIN_POSITIVE)
}

/// Tr[G·F⁻¹], the attainable estimation cost.
pub fn crb_cost(f: &QfiMatrix, g: &CostMatrix) -> Result<f64> {
    if f.n() != g.n() {
        return Err(Error::DimMismatch {
            left: f.n(),
            right: g.n(),
            what: "crb_cost",
        });
    }
    let inv = f.inverse()?;
    let mut tr = 0.0;
    for a in 0..f.n() {
        for k in 0..f.n() {
            tr += g.get(a, k) * inv.get(k, a);
        }
    }
    Ok(tr)
}

/// Everything the precision pipeline reports.
#[derive(Debug, Clone)]
pub struct PrecisionReport {
    pub qfi: QfiMatrix,
    /// Diagonal of F⁻¹, per parameter.
    pub variances: Vec<f64>,
    /// Tr[G·F⁻¹].
    pub cost: f64,
    /// max over pairs of |⟨ψ₀|[ℋ_α, ℋ_β]|ψ₀⟩|.
    pub saturation_residual: f64,
    /// Residual negligible relative to the generator scales.
    pub saturable: bool,
}

/// Builds a full report from a probe state, generators, and cost weights.
pub fn precision_report(
    psi: &StateVector,
    gens: &GeneratorSet,
    g: &CostMatrix,
) -> Result<PrecisionReport> {
    let f = qfi_matrix(psi, gens)?;
    let inv = f.inverse()?;
    let variances = (0..f.n()).map(|k| inv.get(k, k)).collect();
    let cost = crb_cost(&f, g)?;
    let residual = saturation_residual(psi, gens)?;
    let saturable = saturation_flag(residual, gens);
    Ok(PrecisionReport {
        qfi: f,
        variances,
        cost,
        saturation_residual: residual,
        saturable,
    })
}
