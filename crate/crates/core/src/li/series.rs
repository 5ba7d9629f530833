use super::dd::Dd;
use super::{EULER_GAMMA, LI_AT_2, SERIES_MAX_TERMS, SERIES_REL_TOL, TWO_OVER_LN2};
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::num::Real;

/// Asymptotic expansion `sum_n n! x / log^{n+1} x`, stopped at the smallest
/// term (index `floor(log x)`). An approximation only; requires `x >= e^2`.
pub fn li_asymptotic<T: Real>(x: T) -> Result<T> {
    let e2 = T::E() * T::E();
    if !(x >= e2) {
        return Err(Error::domain(
            "li_asymptotic",
            format!("x = {x:?} is below e^2, where the expansion is unusable"),
        ));
    }
    let y = x.ln();
    let n0 = y.floor().to_usize().unwrap_or(0);
    let mut term = x / y;
    let mut sum = KahanSum::new();
    sum.add(term);
    for n in 1..=n0 {
        term = term * T::from_count(n as u64) / y;
        sum.add(term);
    }
    Ok(sum.value())
}

fn check_above_one<T: Real>(op: &'static str, x: T) -> Result<()> {
    if !(x > T::one()) {
        return Err(Error::domain(op, format!("x = {x:?} must exceed 1")));
    }
    Ok(())
}

/// `li(x) = gamma + log log x + sum_{n>=1} log^n x / (n n!)`, for `x > 1`.
pub fn li_series<T: Real>(x: T) -> Result<T> {
    check_above_one("li_series", x)?;
    let y = x.ln();
    let tol = T::lit(SERIES_REL_TOL);
    let mut power = T::one(); // y^n / n!
    let mut sum = KahanSum::new();
    for n in 1..=SERIES_MAX_TERMS {
        let nf = T::from_count(n as u64);
        power = power * y / nf;
        let term = power / nf;
        sum.add(term);
        if term < tol * sum.value() {
            return Ok(T::lit(EULER_GAMMA) + y.ln() + sum.value());
        }
    }
    Err(Error::Convergence {
        op: "li_series",
        terms: SERIES_MAX_TERMS,
    })
}

/// Ramanujan's series for `li(x)`, for `x > 1`:
/// `gamma + log log x + sqrt(x) sum_{n>=1} (-1)^{n-1} log^n x / (n! 2^{n-1})
///  * sum_{k=0}^{floor((n-1)/2)} 1/(2k+1)`.
pub fn li_ramanujan<T: Real>(x: T) -> Result<T> {
    check_above_one("li_ramanujan", x)?;
    let y = x.ln();
    let half_y = T::lit(0.5) * y;
    let tol = T::lit(SERIES_REL_TOL);
    // (-1)^{n-1} y^n / (n! 2^{n-1}), starting at n = 1.
    let mut power = y;
    let mut inner = T::zero();
    let mut sum = KahanSum::new();
    for n in 1..=SERIES_MAX_TERMS {
        if n > 1 {
            power = -power * half_y / T::from_count(n as u64);
        }
        if n % 2 == 1 {
            inner = inner + (T::from_count(n as u64)).recip();
        }
        let term = power * inner;
        sum.add(term);
        if term.abs() < tol * sum.value().abs() {
            return Ok(T::lit(EULER_GAMMA) + y.ln() + x.sqrt() * sum.value());
        }
    }
    Err(Error::Convergence {
        op: "li_ramanujan",
        terms: SERIES_MAX_TERMS,
    })
}

/// `Li(x) = li(x) - li(2)`, the integral of `1/log u` from 2, for `x >= 2`.
pub fn li_offset<T: Real>(x: T) -> Result<T> {
    if !(x >= T::lit(2.0)) {
        return Err(Error::domain("li_offset", format!("x = {x:?} < 2")));
    }
    if x == T::lit(2.0) {
        return Ok(T::zero());
    }
    Ok(li_ramanujan(x)? - T::lit(LI_AT_2))
}

/// Which constant accompanies `Li(x) - x/log x` when it stands in for `Li2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Li2Convention {
    /// `Li(x) - x/log x + 2/log 2`, which vanishes at `x = 2` and equals the
    /// integral of `1/log^2 u` from 2.
    #[default]
    OffsetCorrected,
    /// `Li(x) - x/log x` as written, off by `-2/log 2` everywhere.
    Uncorrected,
}

impl Li2Convention {
    /// Value to add to an offset-corrected `Li2` to obtain this convention.
    pub fn shift(self) -> f64 {
        match self {
            Li2Convention::OffsetCorrected => 0.0,
            Li2Convention::Uncorrected => -TWO_OVER_LN2,
        }
    }
}

// log(2) split so that e * LN2_HI is exact for |e| < 2^11.
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// `log x` as a double-double, accurate to a few units in 1e-17 absolute.
fn ln_dd(x: f64) -> Dd {
    let bits = x.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = f64::from_bits((bits & ((1u64 << 52) - 1)) | (1023u64 << 52));
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    let ef = e as f64;
    Dd::from(ef * LN2_HI)
        .add(Dd::from(m.ln()))
        .add(Dd::from(ef * LN2_LO))
}

/// `Li2(x)` through the series of `li`, for `x >= 2`:
/// `Li(x) - x/log x + 2/log 2` under the default convention.
///
/// The difference `li(x) - x/log x` is summed term by term as
/// `gamma + log y - 1/y - 1 + sum_{n>=1} y^n / (n! n (n+1))` with
/// `y = log x`, in double-double, which avoids cancelling two numbers of
/// size `x/log x`.
pub fn li2_from_li(x: f64, convention: Li2Convention) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::domain("li2_from_li", format!("x = {x} < 2")));
    }
    if x == 2.0 {
        return Ok(convention.shift());
    }
    let y = ln_dd(x);
    let mut power = Dd::from(1.0); // y^n / n!
    let mut sum = Dd::ZERO;
    let mut converged = false;
    for n in 1..=SERIES_MAX_TERMS {
        let nf = n as f64;
        power = power.mul(y).div_f64(nf);
        let term = power.div_f64(nf * (nf + 1.0));
        sum = sum.add(term);
        if term.hi < 1e-32 * sum.hi {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            op: "li2_from_li",
            terms: SERIES_MAX_TERMS,
        });
    }
    let yh = y.hi;
    let small = EULER_GAMMA - 1.0 - LI_AT_2 + TWO_OVER_LN2 + yh.ln() - yh.recip();
    Ok(sum.hi + (sum.lo + small) + convention.shift())
}
