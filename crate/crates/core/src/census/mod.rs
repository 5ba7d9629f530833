//! The sign-change census of `d2(x) = pi2(x) - C2 Li2(x)`.
//!
//! The census folds the ascending stream of primes. Every prime updates the
//! ordinary-prime difference `d(x) = Li(x) - pi(x)` and its envelope; every
//! twin pair `(p, q)` advances `C2 Li2` to `q`, counts the pair and samples
//! `d2` at `q+`, just after the count. A sign change is attributed to the
//! pair at which the new sign is first observed.

mod checkpoint;
mod envelope;
mod records;
mod run;

pub use checkpoint::{checkpoint_load, checkpoint_save, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use envelope::{EnvelopeEvents, EnvelopeSample, ENVELOPE_HEADER};
pub use records::{nu2_at, nu2_table, read_records, write_records, RECORDS_HEADER};
pub use run::{resume_census, run_census, CensusConfig, CensusResult, MethodDiff, Progress};

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::li::{li2_from_li, li2_quadrature, li_quadrature, Li2Convention, QuadratureRule};
use crate::sieve::TwinPair;

/// How `Li2` is advanced from one twin to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Li2Method {
    /// 10-point Gauss-Legendre panels between consecutive twins, accumulated
    /// with compensated summation.
    #[default]
    Quadrature,
    /// `Li2(q)` evaluated afresh at every twin from the `li` series.
    Series,
}

impl Li2Method {
    pub fn name(self) -> &'static str {
        match self {
            Li2Method::Quadrature => "quadrature",
            Li2Method::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Positive => 1,
        }
    }

    /// Sign of `v`, or `None` for zero and NaN.
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Positive)
        } else if v < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    NegToPos,
    PosToNeg,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::NegToPos => "neg->pos",
            Direction::PosToNeg => "pos->neg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "neg->pos" => Some(Direction::NegToPos),
            "pos->neg" => Some(Direction::PosToNeg),
            _ => None,
        }
    }
}

/// One observed sign change of `d2`.
///
/// `d2_before` is `d2` at the previous twin sample, `d2_after` at `q+` of
/// the attributed pair; the two always have opposite signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChangeRecord {
    pub ordinal: u64,
    pub p: u64,
    pub q: u64,
    pub direction: Direction,
    pub d2_before: f64,
    pub d2_after: f64,
}

/// Running state of the census after every prime below `boundary`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusState {
    pub method: Li2Method,
    pub convention: Li2Convention,
    /// Every prime `< boundary` has been folded in.
    pub boundary: u64,
    /// Upper member of the last twin pair, or 2 before the first one.
    pub x_cursor: u64,
    pub twin_count: u64,
    /// `C2 Li2(x_cursor)` with its compensation term.
    pub li2: KahanSum<f64>,
    /// Sign of `d2` at `x_cursor+`.
    pub sign: Sign,
    pub change_count: u64,
    /// Largest `|d2|` seen so far.
    pub delta2_max: f64,
    /// Last prime folded in, 0 before the first.
    pub prime_cursor: u64,
    pub prime_count: u64,
    /// `Li(prime_cursor)` with its compensation term.
    pub li: KahanSum<f64>,
    /// Largest `|d|` seen so far.
    pub delta_max: f64,
    /// Twin samples where `d2` was exactly zero in floating point.
    pub zero_hits: u64,
}

impl CensusState {
    pub fn new(method: Li2Method, convention: Li2Convention) -> Self {
        let mut li2 = KahanSum::new();
        // Li2 under the uncorrected convention starts at -2/log 2.
        li2.add(crate::li::TWIN_CONSTANT * convention.shift());
        Self {
            method,
            convention,
            boundary: 2,
            x_cursor: 2,
            twin_count: 0,
            li2,
            sign: initial_sign(convention),
            change_count: 0,
            delta2_max: 0.0,
            prime_cursor: 0,
            prime_count: 0,
            li: KahanSum::new(),
            delta_max: 0.0,
            zero_hits: 0,
        }
    }

    /// `d2` at `x_cursor+`.
    #[inline]
    pub fn d2(&self) -> f64 {
        self.twin_count as f64 - self.li2.value()
    }

    /// `d = Li - pi` just after `prime_cursor`.
    #[inline]
    pub fn d(&self) -> f64 {
        self.li.value() - self.prime_count as f64
    }

    /// Folds in the next twin pair, returning a record if the sign flipped.
    pub fn advance(&mut self, pair: TwinPair, rule: &QuadratureRule<f64>) -> Result<Option<SignChangeRecord>> {
        let li2_q = match self.method {
            Li2Method::Quadrature => {
                self.check_order(pair)?;
                li2_quadrature(self.x_cursor as f64, pair.q as f64, rule)?
            }
            Li2Method::Series => li2_from_li(pair.q as f64, self.convention)?,
        };
        self.advance_with(pair, li2_q)
    }

    fn check_order(&self, pair: TwinPair) -> Result<()> {
        if pair.q != pair.p + 2 || pair.p + 2 <= self.x_cursor {
            return Err(Error::StreamIntegrity(format!(
                "twin pair ({}, {}) does not follow x = {}",
                pair.p, pair.q, self.x_cursor
            )));
        }
        Ok(())
    }

    /// Like [`Self::advance`] with the `Li2` increment (quadrature method:
    /// the integral from `x_cursor` to `q`) or value (series method: `Li2(q)`)
    /// already computed.
    pub(crate) fn advance_with(&mut self, pair: TwinPair, li2_term: f64) -> Result<Option<SignChangeRecord>> {
        self.check_order(pair)?;
        let d2_prev = self.d2();
        match self.method {
            Li2Method::Quadrature => self.li2.add(crate::li::TWIN_CONSTANT * li2_term),
            Li2Method::Series => self.li2 = KahanSum::from_parts(crate::li::TWIN_CONSTANT * li2_term, 0.0),
        }
        self.x_cursor = pair.q;
        self.twin_count += 1;
        let d2 = self.d2();
        // d2 decreases between twins, so its largest excursions sit just
        // before and just after each jump.
        self.delta2_max = self.delta2_max.max((d2 - 1.0).abs()).max(d2.abs());
        let Some(sign) = Sign::of(d2) else {
            self.zero_hits += 1;
            return Ok(None);
        };
        if sign == self.sign {
            return Ok(None);
        }
        self.sign = sign;
        self.change_count += 1;
        Ok(Some(SignChangeRecord {
            ordinal: self.change_count,
            p: pair.p,
            q: pair.q,
            direction: match sign {
                Sign::Positive => Direction::NegToPos,
                Sign::Negative => Direction::PosToNeg,
            },
            d2_before: d2_prev,
            d2_after: d2,
        }))
    }

    /// Folds in the next prime for the ordinary-prime difference `d`.
    pub(crate) fn observe_prime_with(&mut self, prime: u64, li_increment: f64) {
        self.li.add(li_increment);
        let before = self.d();
        self.prime_count += 1;
        self.prime_cursor = prime;
        let after = self.d();
        self.delta_max = self.delta_max.max(before.abs()).max(after.abs());
    }

    pub(crate) fn observe_prime(&mut self, prime: u64, rule: &QuadratureRule<f64>) -> Result<()> {
        let from = self.prime_cursor.max(2) as f64;
        let inc = li_quadrature(from, prime as f64, rule)?;
        self.observe_prime_with(prime, inc);
        Ok(())
    }
}

fn initial_sign(convention: Li2Convention) -> Sign {
    // d2(2+) = -C2 Li2(2+): negative when Li2 starts at 0, positive when it
    // starts at -2/log 2.
    match convention {
        Li2Convention::OffsetCorrected => Sign::Negative,
        Li2Convention::Uncorrected => Sign::Positive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::li::TWIN_CONSTANT;

    fn rule() -> QuadratureRule<f64> {
        QuadratureRule::gauss_legendre_10()
    }

    #[test]
    fn no_flip_counts_the_pair() {
        let mut s = CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected);
        let r = s.advance(TwinPair::new(3), &rule()).unwrap();
        assert!(r.is_none());
        assert_eq!(s.twin_count, 1);
        assert_eq!(s.x_cursor, 5);
        assert_eq!(s.sign, Sign::Negative);
        let r = s.advance(TwinPair::new(5), &rule()).unwrap();
        assert!(r.is_none());
        assert_eq!(s.twin_count, 2);
    }

    #[test]
    fn constructed_upward_flip() {
        let x = 1_000_000_000_000u64;
        let mut s = CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected);
        s.x_cursor = x;
        s.twin_count = 10;
        s.li2 = KahanSum::from_parts(10.3, 0.0);
        s.sign = Sign::Negative;
        assert!((s.d2() + 0.3).abs() < 1e-12);
        let r = s.advance(TwinPair::new(x), &rule()).unwrap().expect("flip");
        let inc = TWIN_CONSTANT * li2_quadrature(x as f64, (x + 2) as f64, &rule()).unwrap();
        assert_eq!(r.direction, Direction::NegToPos);
        assert_eq!(r.ordinal, 1);
        assert_eq!((r.p, r.q), (x, x + 2));
        assert_eq!(r.d2_before, 10.0 - 10.3);
        assert!((r.d2_after - (0.7 - inc)).abs() < 1e-12);
        assert!(r.d2_before < 0.0 && r.d2_after > 0.0);
    }

    #[test]
    fn downward_flip_has_opposite_signs() {
        let x = 1_000_001u64;
        let mut s = CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected);
        s.x_cursor = x;
        s.twin_count = 10;
        s.li2 = KahanSum::from_parts(9.9, 0.0);
        s.sign = Sign::Positive;
        // next twin far away: d2 falls by more than the +1 jump
        let r = s.advance(TwinPair::new(x + 20_000), &rule()).unwrap().expect("flip");
        assert_eq!(r.direction, Direction::PosToNeg);
        assert!(r.d2_before > 0.0 && r.d2_after < 0.0);
    }

    #[test]
    fn out_of_order_pair_is_rejected() {
        let mut s = CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected);
        s.advance(TwinPair::new(11), &rule()).unwrap();
        let err = s.advance(TwinPair::new(5), &rule()).unwrap_err();
        assert!(matches!(err, Error::StreamIntegrity(_)));
        let err = s.advance(TwinPair { p: 17, q: 21 }, &rule()).unwrap_err();
        assert!(matches!(err, Error::StreamIntegrity(_)));
    }

    #[test]
    fn exact_zero_keeps_sign() {
        let mut s = CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected);
        s.x_cursor = 101;
        s.twin_count = 4;
        s.li2 = KahanSum::from_parts(5.0, 0.0);
        let r = s.advance_with(TwinPair::new(101), 0.0).unwrap();
        assert_eq!(s.d2(), 0.0);
        assert!(r.is_none());
        assert_eq!(s.zero_hits, 1);
        assert_eq!(s.sign, Sign::Negative);
    }

    #[test]
    fn series_and_quadrature_agree_early() {
        let mut a = CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected);
        let mut b = CensusState::new(Li2Method::Series, Li2Convention::OffsetCorrected);
        for p in [3, 5, 11, 17, 29, 41, 59, 71] {
            a.advance(TwinPair::new(p), &rule()).unwrap();
            b.advance(TwinPair::new(p), &rule()).unwrap();
            assert!((a.d2() - b.d2()).abs() < 1e-12, "p = {p}");
        }
    }
}
