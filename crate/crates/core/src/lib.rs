//! Conformal mapping of rectangular heptagons with an infinite channel onto the
//! upper half plane.
//!
//! The Christoffel-Schwarz integral of such a heptagon is an abelian integral on
//! a genus-2 curve with six real branch points. Everything here is evaluated in
//! closed form through genus-2 Riemann theta functions, while an independent
//! quadrature path ([`oracle`]) recomputes each quantity directly on the curve.
//!
//! Module map:
//! - [`theta`]: theta series with characteristics, gradients, tiles of the Jacobian.
//! - [`quad`]: quadrature kernels for hyperelliptic integrals.
//! - [`curve`]: periods, Abel-Jacobi map, Rosenhain recovery, projection.
//! - [`heptagon`]: heptagon spaces, validation and geometry.
//! - [`mapper`]: the auxiliary parameter solver and both directions of the map.
//! - [`oracle`]: quadrature reference implementations.

// `!(a < b)` is used on purpose so that NaN takes the failure branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod exec;
pub mod heptagon;
pub mod io;
pub mod mapper;
pub mod oracle;
pub mod quad;
pub mod selftest;
pub mod theta;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// A point of `C²`, e.g. an argument of the theta function.
pub type CVec2 = nalgebra::Vector2<C64>;
/// Real 2×2 matrix (the imaginary part Ω of a purely imaginary period matrix).
pub type Mat2 = nalgebra::Matrix2<f64>;
/// Complex 2×2 matrix.
pub type CMat2 = nalgebra::Matrix2<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
pub(crate) fn cvec(a: C64, b: C64) -> CVec2 {
    CVec2::new(a, b)
}

pub(crate) fn rvec(a: f64, b: f64) -> CVec2 {
    CVec2::new(C64::new(a, 0.0), C64::new(b, 0.0))
}
