//! Substitution subshifts and their dyadic odometer factor.
//!
//! The crate builds fixed points of substitutions (the Grigorchuk substitution
//! `a → aca, b → d, c → b, d → c` in particular), reads off their Toeplitz
//! period skeleton, computes the factor map onto the dyadic integers, and
//! checks the ergodic and spectral behaviour of the subshift by exact counting.

pub mod ergodic;
pub mod error;
pub mod factormap;
pub mod odometer;
pub mod substitution;
pub mod toeplitz;
pub mod verify;

pub use error::{Error, Result};
pub use substitution::{Alphabet, Substitution, SymbolicPrefix};
