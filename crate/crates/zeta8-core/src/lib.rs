//! Numerical kernels for experiments with high moments of the Riemann zeta
//! function and smoothed additive divisor sums.
//!
//! The crate is split into six layers:
//!
//! * [`arith`]: integer arithmetic — divisor-count sieves, Mobius/totient
//!   tables, Ramanujan sums, and the local factors `g_k` / `G_k` attached to
//!   shifted divisor correlations.
//! * [`numerics`]: contour and line quadrature plus exact big-rational
//!   arithmetic.
//! * [`special`]: zeta, log-gamma, the gamma-ratio kernel and smoothing
//!   kernels on vertical lines, and the shifted-moment normalizer.
//! * [`eulerprod`]: arithmetic constants, Euler products, and the Ramanujan /
//!   `G_4` double Dirichlet series with its zeta factorization.
//! * [`divisor`]: smooth test weights, brute-force additive divisor sums, and
//!   the conjectural main term evaluated as a double contour integral.
//! * [`moments`]: critical-line moment integrals, the smoothed approximate
//!   functional equation, diagonal residue extraction, and exact rational
//!   constant identities.
//!
//! Everything is `no_std + alloc` compatible; enable the default `std` feature
//! for host builds.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod arith;
pub mod divisor;
pub mod eulerprod;
pub mod moments;
pub mod numerics;
pub mod special;

pub use num_complex::Complex64;

/// `base^z` for positive real `base`, via `exp(z ln base)`.
#[inline]
pub fn powc(base: f64, z: Complex64) -> Complex64 {
    debug_assert!(base > 0.0);
    use num_traits::Float;
    (z * Float::ln(base)).exp()
}
