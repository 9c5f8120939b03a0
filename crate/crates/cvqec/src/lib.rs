//! Numerical simulator for a continuous-variable quantum erasure-correcting
//! code: encoding of two bosonic signals with an EPR ancilla over four
//! channels, a stochastic erasure channel, joint syndrome measurement, and
//! both deterministic feedforward correction and probabilistic
//! post-selection, with exact Gaussian and truncated-Fock backends.

pub mod code;
mod error;
pub mod fock;
pub mod gaussian;

pub use error::{Error, Result};
