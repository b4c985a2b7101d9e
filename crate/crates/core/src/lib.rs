//! Distinguishability, Fisher information and error-correction diagnostics
//! for pure spin-J states.
//!
//! The crate is organized bottom-up:
//!
//! * [`spin`]: states, angular-momentum matrices, rotations and moments.
//! * [`wigner`]: exact 3j symbols and spherical tensor operators.
//! * [`metrics`]: statistical distance, distinguishability, Fisher information.
//! * [`codes`]: error-detection and Knill–Laflamme checks, error of state.
//! * [`sensing`]: rotation Fisher matrix and anti-coherent sensor states.
//! * [`estimation`]: Monte Carlo check of the Cramér–Rao bound.

pub mod codes;
pub mod error;
pub mod estimation;
pub mod metrics;
pub mod numfmt;
pub mod sensing;
pub mod spin;
pub mod wigner;

pub use error::{Error, Result};
pub use spin::{
    apply, build_spin_operators, evolution, expectation, expectation_and_variance, rotation_unitary, CMatrix,
    CVector, Moments, RotationAxis, SpinJ, SpinOperator, SpinOperators, SpinState,
};
