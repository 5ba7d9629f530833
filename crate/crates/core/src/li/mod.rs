//! Logarithmic integrals and the twin constant.
//!
//! Conventions:
//!
//! * `li(x)` is the principal-value integral of `1/log u` from 0 to `x`;
//! * `Li(x) = li(x) - li(2)` integrates from 2 ([`li_offset`]);
//! * `Li2(x)` is the integral of `1/log^2 u` from 2 to `x`, so `Li2(2) = 0`.

mod dd;
mod quadrature;
mod series;
mod twin;

pub use quadrature::{li2_quadrature, li_quadrature, QuadratureRule, PANEL_GROWTH};
pub use series::{li2_from_li, li_asymptotic, li_offset, li_ramanujan, li_series, Li2Convention};
pub use twin::{twin_constant, twin_constant_tail};

use crate::num::Real;

/// Twin constant `2 * prod_{p > 2} (1 - 1/(p - 1)^2)` to the digits used by
/// the census.
pub const TWIN_CONSTANT: f64 = 1.320_323_631_693_7;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Soldner's constant, the positive zero of `li`.
pub const SOLDNER: f64 = 1.451_369_234_883_381;

/// `li(2)`.
pub const LI_AT_2: f64 = 1.045_163_780_117_493;

/// `2 / log 2`, the value of `x / log x` at the lower integration bound.
pub const TWO_OVER_LN2: f64 = 2.885_390_081_777_926_8;

/// Stopping rule shared by the series evaluators: stop once a term is below
/// this fraction of the running sum.
pub const SERIES_REL_TOL: f64 = 1e-16;

/// Hard cap on series terms before reporting non-convergence.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// The constants of the census, in a chosen scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants<T: Real> {
    pub c2: T,
    pub gamma: T,
    pub mu: T,
}

impl<T: Real> Constants<T> {
    pub fn get() -> Self {
        Self {
            c2: T::lit(TWIN_CONSTANT),
            gamma: T::lit(EULER_GAMMA),
            mu: T::lit(SOLDNER),
        }
    }
}
