//! Numerical laboratory for the solitary waves of the generalized derivative
//! nonlinear Schrödinger equation
//!
//! ```text
//! i∂ₜu + ∂ₓ²u + i|u|^{2σ}∂ₓu = 0,
//! ```
//!
//! covering the stability function F_σ and its root z₀(σ), the closed-form
//! derivatives of d(ω) = S_ω(φ_ω) with finite-difference oracles, the
//! linearized operator S″_ω(φ_ω), and pseudospectral time integration with
//! orbital-distance tracking.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod linearized;
pub mod moments;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod simulator;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use functionals::{ComplexField, ConservedLedger};
pub use params::{Omega, QuadratureSpec, Sigma};
pub use profile::SolitonProfile;
pub use spectral::Grid;
