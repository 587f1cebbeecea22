//! Multi-parameter quantum estimation with time-dependent Hamiltonians.
//!
//! This crate computes quantum Cramér–Rao precision limits for simultaneous
//! estimation of several Hamiltonian parameters, builds the coherent controls
//! that reach them, and ships two fully worked three-level models: a spin-1
//! particle in a uniformly rotating magnetic field and a Landau–Zener sweep.
//!
//! The pipeline, bottom to top:
//!
//! * [`linalg`]: dense complex matrices, Jacobi eigensolver, spectral
//!   matrix exponential;
//! * [`spin`]: spin-1 operators and probe states;
//! * [`evolve`]: time-ordered propagation and the sensitivity generators
//!   ℋ_m = ∫₀ᵀ U†(0→t)·∂_mH(t)·U(0→t) dt;
//! * [`control`]: counter-diabatic control construction;
//! * [`qfi`]: Fisher matrices, Cramér–Rao cost, saturation diagnostics;
//! * [`models`]: the rotating-field and Landau–Zener models.
//!
//! ```
//! use qfe::models::rotating_field::{self, RotatingFieldParams};
//!
//! // Optimally controlled simultaneous estimation of (B, ω):
//! // Δ²B = 1/(4T²) and Δ²ω = 1/(B²T⁴).
//! let p = RotatingFieldParams::new(1.0, 0.7, 2.0)?;
//! let report = rotating_field::optimal_controlled_precision(&p, 1024.0)?;
//! assert!((report.variances[0] - 0.0625).abs() < 1e-7);
//! assert!((report.variances[1] - 0.0625).abs() < 1e-7);
//! # Ok::<(), qfe::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod control;
pub mod error;
pub mod evolve;
pub mod linalg;
pub mod models;
pub mod opt;
pub mod qfi;
pub mod quad;
pub mod rng;
pub mod spin;

mod book;

pub use error::{Error, Result};
