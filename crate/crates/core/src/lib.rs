//! Twin-prime analogue of the Skewes problem: counts and locates the sign
//! changes of `d2(x) = pi2(x) - C2 Li2(x)`, tracks error envelopes for twins
//! and for ordinary primes, and computes running logarithmic densities of
//! the sets where `d2` is positive or negative.

pub mod analysis;
pub mod census;
pub mod density;
pub mod error;
pub mod io;
pub mod kahan;
pub mod li;
pub mod num;
pub mod sieve;

pub use error::{Error, Result};
pub use num::Real;

/// Compensated accumulator used throughout the census.
pub type Kahan = kahan::KahanSum<f64>;
/// The 10-point rule in double precision.
pub type Quadrature = li::QuadratureRule<f64>;
