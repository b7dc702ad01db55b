//! Quasi-exact bound states of a radial Dirac equation in a curved
//! background with the generalized potential `z(r) = u/r + v/r² + w/r³`.
//!
//! The crate computes closed-form energies, solves the Bethe-ansatz root and
//! parameter-constraint system, evaluates analytic wavefunctions, and ships
//! independent numerical oracles that certify each analytic solution.
//!
//! ```
//! use core::f64::consts::FRAC_PI_4;
//! use qdirac_core::{bethe, model::{Branch, ModelParams}, spectrum};
//!
//! let params = ModelParams::new(1.0, 1.0, 1.5, -FRAC_PI_4, -1.0, Branch::Minus).unwrap();
//! let level = spectrum::energy(&params, 0).unwrap();
//! assert!((level.epsilon + 12.0 / 13.0).abs() < 1e-12);
//! let sol = bethe::solve_n0(&bethe::BetheProblem::new(params, 0, level.epsilon)).unwrap();
//! assert_eq!((sol.v, sol.w), (0.0, 0.0));
//! ```

#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bethe;
pub mod error;
pub mod model;
pub mod numeric;
pub mod spectrum;
pub mod verify;
pub mod wavefunction;

pub use error::{Error, Result};
