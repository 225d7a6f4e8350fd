//! Exact propagators and wave functions of time-dependent quadratic
//! quantum systems, built from solutions of the classical equation of motion.

// `!(a > b)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod classical;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod observables;
pub mod oracle;
pub mod ode;
pub mod propagate;
pub mod quad;
pub mod scenario;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use scenario::{Coefficients, DerivedCoefficients, Scenario, SystemClass, Variant};
pub use grid::ComplexGridFunction;
