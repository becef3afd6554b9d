//! Coherent-state laboratory.
//!
//! Numerical realizations of three coherent-state constructions on truncated
//! Fock spaces, each paired with an independent exact oracle:
//!
//! * [`fock`]: ladder operators, coherent states `|p,q⟩ = e^{-iqP/ħ} e^{ipQ/ħ}|0⟩`,
//!   overlaps, normal / anti-normal / mixed symbols and the matrix-exponential
//!   propagator.
//! * [`propagators`]: time-sliced lattice propagators in the alternating
//!   position/momentum form and in the coherent-state form.
//! * [`wiener`]: the Brownian-bridge regularized coherent-state path integral,
//!   estimated by Monte Carlo, and its covariance under phase-plane isometries.
//! * [`classical`]: the restricted (coherent-state) action, Hamilton flow of the
//!   normal symbol and its comparison with Ehrenfest mean values.
//! * [`rotsym`]: rotationally symmetric quartic models, classically in `N`
//!   dimensions and quantum mechanically through a reducible two-mode
//!   representation.
//! * [`harness`]: configuration, dispatch and persistence used by the `cslab`
//!   command line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod fock;
pub mod harness;
pub mod propagators;
pub mod rotsym;
pub mod wiener;

pub use error::{Error, Result};
pub use fock::{FockOperator, FockSpace, FockVector, PhasePoint};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
