//! Numerical machinery for the modified Mellin transform
//!
//! ```text
//! Z1(s) = ∫_1^∞ |ζ(1/2 + ix)|² x^(-s) dx
//! ```
//!
//! and for the objects that surround it: the Hardy function, the mean-square
//! error term `E(T)` with its integrals `G(T)` and `G1(T)`, the Laplace
//! transform `L1(σ)` and its expansion coefficients.
//!
//! Every numerical routine returns an [`EvalResult`] carrying an absolute
//! error estimate next to the value.

pub mod arith;
pub mod error;
pub mod eval;
pub mod laplace;
pub mod mean_square;
pub mod mellin;
pub mod quadrature;
pub mod rational;
pub mod samples;
pub mod sum;
pub mod zeta;

pub use error::{Error, Result};
pub use eval::EvalResult;

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// log(2π).
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
