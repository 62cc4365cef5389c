//! Single-mode laser channel simulation.
//!
//! A field mode with gain `g` and loss `kappa` evolves through a Kraus map
//! whose operators are known in closed form. This crate evolves arbitrary
//! truncated Fock-space states through that map ([`channel`]), evaluates
//! photon-number moments and second-degree coherence directly in the
//! Heisenberg picture ([`heisenberg`]), provides the closed-form entropy
//! results and bounds ([`entropy`]), and carries an independent Runge-Kutta
//! integrator of the master equation ([`lindblad`]) to check all of it.
//!
//! Units: `ħω = k_B = 1`, entropy in nats.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod entropy;
pub mod error;
pub mod fock;
pub mod heisenberg;
pub mod lindblad;
mod lnfact;

pub use channel::{
    evolve_diagonal, evolve_fock, steady_state, t_coeffs, trace_defect, LaserParams, Regime,
    TCoefficients,
};
pub use error::{Error, Result};
pub use fock::{
    coherent_mixture, coherent_state, number_state, thermal_state, DensityMatrix, DiagonalState,
    FockBasis, PhotonStatistics,
};
pub use lnfact::{ln_binomial, ln_factorial};

pub use num_complex::Complex64;
