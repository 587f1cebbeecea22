use thiserror::Error;

/// Errors surfaced by the estimation toolkit.
#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A†| = {deviation:.3e} exceeds {tol:.0e}{}", context_suffix(.context))]
    NotHermitian {
        deviation: f64,
        tol: f64,
        context: String,
    },

    #[error("dimension mismatch: {left} vs {right} in {what}")]
    DimMismatch {
        left: usize,
        right: usize,
        what: &'static str,
    },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})"
    )]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("degenerate spectrum at t = {t}: eigenvalue gap {gap:.3e} below {tol:.0e}")]
    DegenerateSpectrum { t: f64, gap: f64, tol: f64 },

    #[error(
        "Fisher matrix is singular or ill-conditioned (condition number {cond:.3e}); \
             non-identifiable direction {null_direction:?}"
    )]
    SingularFisher { cond: f64, null_direction: Vec<f64> },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("minimum not bracketed: grid minimum at boundary gamma = {gamma}")]
    UnbracketedMinimum { gamma: f64 },

    #[error("saturation constraint violated: residual {residual:.3e} exceeds {tol:.3e} at gamma = {gamma}")]
    ConstraintViolated { residual: f64, tol: f64, gamma: f64 },

    #[error("unitarity lost: max |U†U - I| = {deviation:.3e} exceeds {tol:.0e}")]
    UnitarityLost { deviation: f64, tol: f64 },
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
