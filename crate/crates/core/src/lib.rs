//! Kähler geometry laboratory for projectivized Hermitian vector bundles.
//!
//! The metric `λ π*ω_g + i∂∂̄ log h(v,v̄)` on `P(E)` is assembled as a local
//! potential in each chart ([`models`]), differentiated exactly
//! ([`wirtinger`]) and turned into metric and curvature tensors
//! ([`kahler`]). [`positivity`] searches for the holomorphic sectional
//! curvature minimum, the threshold `λ₀` and the sufficient bound `λ*`;
//! [`papercheck`] verifies the pointwise identities at distinguished points.

// `!(x > 0.0)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kahler;
pub mod linalg;
pub mod models;
pub mod papercheck;
pub mod positivity;
pub mod wirtinger;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
