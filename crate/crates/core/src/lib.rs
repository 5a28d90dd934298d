//! Quantum linear systems (QLS) in the doubled-up formalism.
//!
//! A system is the triple `(S, C, Omega)` of field scattering, coupling and
//! Hamiltonian matrices. The crate evaluates transfer functions and power
//! spectra, tests stability, minimality and global minimality, reconstructs
//! physical realizations from transfer-function and power-spectrum data,
//! builds coherent quantum absorbers, and computes quantum Fisher information
//! rates for one-parameter families.

pub mod absorber;
pub mod core_algebra;
pub mod error;
pub mod estimation;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod realization;
pub mod stationary;
pub mod system;

pub mod cli;

pub use core_algebra::{DoubledUp, WilliamsonResult};
pub use error::{QlsError, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use stationary::InputCovariance;
pub use system::{ParamFamily, QLSystem, StateSpace};

/// Default numerical tolerances. Every operation that takes a tolerance
/// falls back to these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Doubled-up structure checks (relative).
    pub structure: f64,
    /// Algebraic residuals (relative).
    pub numeric: f64,
    /// Singular-value cutoff for rank decisions (relative to the largest).
    pub rank: f64,
    /// Strict margin for the Hurwitz test.
    pub stability: f64,
    /// Symplectic eigenvalues at or below this count as pure modes.
    pub global_minimality: f64,
    /// Absolute tolerance when matching pole locations.
    pub pole: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            structure: 1e-10,
            numeric: 1e-8,
            rank: 1e-10,
            stability: 1e-12,
            global_minimality: 1e-7,
            pole: 1e-6,
        }
    }
}
