use crate::error::{Error, Result};
use crate::num::Real;

// Positive abscissae and weights of the 10-point Gauss-Legendre rule.
const NODES: [f64; 5] = [
    0.148_874_338_981_631_210_884_826_001_129_7,
    0.433_395_394_129_247_190_799_265_943_165_8,
    0.679_409_568_299_024_406_234_327_365_114_9,
    0.865_063_366_688_984_510_732_096_688_423_5,
    0.973_906_528_517_171_720_077_964_012_084_5,
];
const WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_870_173_892_994_651_3,
    0.269_266_719_309_996_355_091_226_921_569_5,
    0.219_086_362_515_982_043_995_534_934_228_2,
    0.149_451_349_150_580_593_145_776_339_657_7,
    0.066_671_344_308_688_137_593_568_809_893_33,
];

/// Largest ratio `b/a` of a single panel in [`QuadratureRule::integrate_geometric`].
/// Keeps the pole of `1/log^2 u` at `u = 1` at least three half-widths away
/// from any panel starting at or above 2.
pub const PANEL_GROWTH: f64 = 1.5;

/// A symmetric 10-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule<T: Real> {
    nodes: [T; 5],
    weights: [T; 5],
}

impl<T: Real> Default for QuadratureRule<T> {
    fn default() -> Self {
        Self::gauss_legendre_10()
    }
}

impl<T: Real> QuadratureRule<T> {
    pub fn gauss_legendre_10() -> Self {
        Self {
            nodes: NODES.map(T::lit),
            weights: WEIGHTS.map(T::lit),
        }
    }

    /// All ten abscissae, ascending.
    pub fn nodes(&self) -> [T; 10] {
        let mut out = [T::zero(); 10];
        for i in 0..5 {
            out[4 - i] = -self.nodes[i];
            out[5 + i] = self.nodes[i];
        }
        out
    }

    /// Weights matching [`Self::nodes`].
    pub fn weights(&self) -> [T; 10] {
        let mut out = [T::zero(); 10];
        for i in 0..5 {
            out[4 - i] = self.weights[i];
            out[5 + i] = self.weights[i];
        }
        out
    }

    /// One application of the rule on `[a, b]`.
    #[inline]
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        let half = T::lit(0.5);
        let mid = half * (a + b);
        let rad = half * (b - a);
        let mut acc = T::zero();
        for i in 0..5 {
            let dx = rad * self.nodes[i];
            acc = acc + self.weights[i] * (f(mid - dx) + f(mid + dx));
        }
        acc * rad
    }

    /// Applies the rule on consecutive panels `[a_i, min(1.5 a_i, b)]`. An
    /// interval with `b <= 1.5 a` is a single panel. Requires `a > 0`.
    pub fn integrate_geometric<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        let growth = T::lit(PANEL_GROWTH);
        let mut lo = a;
        let mut acc = T::zero();
        while lo < b {
            let hi = (growth * lo).min(b);
            acc = acc + self.integrate(&f, lo, hi);
            lo = hi;
        }
        acc
    }
}

fn check_interval<T: Real>(op: &'static str, a: T, b: T) -> Result<()> {
    if !(a >= T::lit(2.0)) {
        return Err(Error::domain(op, format!("lower bound {a:?} < 2")));
    }
    if !(b >= a) {
        return Err(Error::domain(op, format!("upper bound {b:?} < lower bound {a:?}")));
    }
    Ok(())
}

/// Integral of `1/log^2 u` over `[a, b]`, `2 <= a <= b`.
///
/// Intervals with `b <= 1.5a` (every gap between consecutive twins past the
/// first few) take a single 10-point panel; longer ones are split into
/// geometrically growing panels.
pub fn li2_quadrature<T: Real>(a: T, b: T, rule: &QuadratureRule<T>) -> Result<T> {
    check_interval("li2_quadrature", a, b)?;
    Ok(rule.integrate_geometric(inv_log_sq, a, b))
}

/// Integral of `1/log u` over `[a, b]`, `2 <= a <= b`.
pub fn li_quadrature<T: Real>(a: T, b: T, rule: &QuadratureRule<T>) -> Result<T> {
    check_interval("li_quadrature", a, b)?;
    Ok(rule.integrate_geometric(inv_log, a, b))
}

#[inline]
pub(crate) fn inv_log<T: Real>(u: T) -> T {
    u.ln().recip()
}

#[inline]
pub(crate) fn inv_log_sq<T: Real>(u: T) -> T {
    let l = u.ln();
    (l * l).recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let r = QuadratureRule::<f64>::gauss_legendre_10();
        let s: f64 = r.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let n = r.nodes();
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exact_for_degree_19() {
        let r = QuadratureRule::<f64>::gauss_legendre_10();
        for deg in 0..=19i32 {
            let got = r.integrate(|x| x.powi(deg), -1.0, 1.0);
            let want = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0), "deg {deg}: {got} vs {want}");
            // shifted interval
            let got = r.integrate(|x| x.powi(deg), 0.0, 1.0);
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() <= 1e-14 * want, "deg {deg} on [0,1]");
        }
    }

    #[test]
    fn degree_20_is_not_exact() {
        let r = QuadratureRule::<f64>::gauss_legendre_10();
        let got = r.integrate(|x| x.powi(20), -1.0, 1.0);
        assert!((got - 2.0 / 21.0).abs() > 1e-8);
    }

    #[test]
    fn empty_interval_and_domain() {
        let r = QuadratureRule::default();
        assert_eq!(li2_quadrature(5.0, 5.0, &r).unwrap(), 0.0);
        assert!(li2_quadrature(1.5, 5.0, &r).is_err());
        assert!(li2_quadrature(6.0, 5.0, &r).is_err());
        assert!(li2_quadrature(f64::NAN, 5.0, &r).is_err());
    }

    #[test]
    fn f32_rule_is_usable() {
        let r = QuadratureRule::<f32>::gauss_legendre_10();
        let v = li2_quadrature(2.0f32, 100.0, &r).unwrap();
        assert!((v - 10.251_644).abs() < 1e-4);
    }
}
