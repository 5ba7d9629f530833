//! Running logarithmic densities of the integers where `d2(n) > 0` and
//! `d2(n) < 0`, built from an exact partition of the integers into runs of
//! constant sign.

use crate::census::Li2Method;
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::kahan::KahanSum;
use crate::li::{li2_from_li, li2_quadrature, Constants, Li2Convention, QuadratureRule};
use crate::sieve::{enumerate_twins, segments, TwinPair, DEFAULT_SEGMENT_LENGTH};

pub const DENSITIES_HEADER: &str = "x,delta_plus,delta_minus";

/// Blocks starting at or above this index use the DeTemple closed form.
pub const DEFAULT_DETEMPLE_THRESHOLD: u64 = 1 << 31;

/// First integer counted towards the negative density: 5 closes the first
/// twin pair.
pub const NEGATIVE_FROM: u64 = 5;

fn check_block(op: &'static str, n: u64, m: u64) -> Result<()> {
    if n < 1 || m < n {
        return Err(Error::domain(op, format!("need 1 <= n <= m, got n = {n}, m = {m}")));
    }
    Ok(())
}

/// `sum_{k=n}^m 1/k` by compensated summation, smallest terms first.
pub fn harmonic_direct(n: u64, m: u64) -> Result<f64> {
    check_block("harmonic_direct", n, m)?;
    let mut s = KahanSum::new();
    for k in (n..=m).rev() {
        s.add(1.0 / k as f64);
    }
    Ok(s.value())
}

/// DeTemple's `log(m + 1/2) - log(n - 1/2)`. The error is `O(1/n^2)` with a
/// constant well below one (about `1/(24 n^2)` for long blocks).
pub fn harmonic_detemple(n: u64, m: u64) -> Result<f64> {
    check_block("harmonic_detemple", n, m)?;
    let len = (m - n + 1) as f64;
    Ok((len / (n as f64 - 0.5)).ln_1p())
}

/// `sum_{k=n}^m 1/k` with the default threshold.
pub fn harmonic_sum(n: u64, m: u64) -> Result<f64> {
    harmonic_sum_with(n, m, DEFAULT_DETEMPLE_THRESHOLD)
}

/// Direct summation when `n < threshold`, DeTemple otherwise.
pub fn harmonic_sum_with(n: u64, m: u64, threshold: u64) -> Result<f64> {
    if n < threshold {
        harmonic_direct(n, m)
    } else {
        harmonic_detemple(n, m)
    }
}

/// Point evaluation of `C2 Li2(n)` along an ascending sequence of anchors.
///
/// The series method evaluates anywhere. The quadrature method integrates
/// from the last anchor, so queries must not go below it.
#[derive(Debug, Clone)]
pub struct SmoothEvaluator {
    method: Li2Method,
    convention: Li2Convention,
    rule: QuadratureRule<f64>,
    c2: f64,
    anchor: u64,
    li2: KahanSum<f64>,
}

impl SmoothEvaluator {
    pub fn new(method: Li2Method, convention: Li2Convention) -> Self {
        Self {
            method,
            convention,
            rule: QuadratureRule::gauss_legendre_10(),
            c2: Constants::<f64>::get().c2,
            anchor: 2,
            li2: KahanSum::from_parts(convention.shift(), 0.0),
        }
    }

    fn li2(&self, n: u64) -> Result<f64> {
        match self.method {
            Li2Method::Series => li2_from_li(n as f64, self.convention),
            Li2Method::Quadrature => {
                if n < self.anchor {
                    return Err(Error::precondition(
                        "SmoothEvaluator",
                        format!("query {n} below anchor {}", self.anchor),
                    ));
                }
                let mut s = self.li2;
                s.add(li2_quadrature(self.anchor as f64, n as f64, &self.rule)?);
                Ok(s.value())
            }
        }
    }

    /// `C2 Li2(n)`.
    pub fn at(&self, n: u64) -> Result<f64> {
        Ok(self.c2 * self.li2(n)?)
    }

    /// Moves the quadrature anchor forward to `n`.
    pub fn rebase(&mut self, n: u64) -> Result<()> {
        if self.method == Li2Method::Quadrature && n > self.anchor {
            self.li2
                .add(li2_quadrature(self.anchor as f64, n as f64, &self.rule)?);
            self.anchor = n;
        }
        Ok(())
    }
}

/// Smallest integer `n` in `(lo, hi]` with `C2 Li2(n) >= level`, or `None`.
pub fn integer_crossing(level: u64, lo: u64, hi: u64, eval: &SmoothEvaluator) -> Result<Option<u64>> {
    if lo >= hi {
        return Err(Error::domain(
            "integer_crossing",
            format!("empty range ({lo}, {hi}]"),
        ));
    }
    let k = level as f64;
    if eval.at(hi)? < k {
        return Ok(None);
    }
    if eval.at(lo + 1)? >= k {
        return Ok(Some(lo + 1));
    }
    let (mut a, mut b) = (lo + 1, hi);
    // value(a) < k <= value(b)
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        if eval.at(mid)? >= k {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(b))
}

/// A maximal run `n_start..=n_end` of integers where `d2` has sign `sign`.
/// A sign of 0 marks integers where `d2` is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignInterval {
    pub n_start: u64,
    pub n_end: u64,
    pub sign: i8,
}

/// Partitions `[2, limit)` into [`SignInterval`]s from an ascending twin stream.
///
/// Between consecutive twins `pi2` is constant and `d2` strictly decreases,
/// so each block `(q_j, q_{j+1}]` splits at one integer crossing at most.
pub struct SignIntervals<I> {
    twins: I,
    limit: u64,
    eval: SmoothEvaluator,
    level: u64,
    last_q: u64,
    done: bool,
    pending: Option<SignInterval>,
    queue: std::collections::VecDeque<SignInterval>,
}

impl<I: Iterator<Item = Result<TwinPair>>> SignIntervals<I> {
    pub fn new(twins: I, limit: u64, eval: SmoothEvaluator) -> Self {
        Self {
            twins,
            limit,
            eval,
            level: 0,
            last_q: 1,
            done: limit <= 2,
            pending: None,
            queue: Default::default(),
        }
    }

    // Splits the block (last_q, hi] at the current level.
    fn block(&mut self, hi: u64) -> Result<Vec<SignInterval>> {
        let lo = self.last_q;
        let mut out = Vec::with_capacity(3);
        let mut push = |a: u64, b: u64, s: i8| {
            if a <= b {
                out.push(SignInterval { n_start: a, n_end: b, sign: s });
            }
        };
        let k = self.level as f64;
        match integer_crossing(self.level, lo, hi, &self.eval)? {
            None => push(lo + 1, hi, 1),
            Some(m) => {
                push(lo + 1, m - 1, 1);
                if self.eval.at(m)? == k {
                    push(m, m, 0);
                    push(m + 1, hi, -1);
                } else {
                    push(m, hi, -1);
                }
            }
        }
        self.eval.rebase(hi)?;
        Ok(out)
    }

    fn refill(&mut self) -> Result<()> {
        while self.queue.is_empty() && !self.done {
            let next = match self.twins.next() {
                Some(pair) => Some(pair?),
                None => None,
            };
            let hi = match next {
                Some(pair) if pair.q < self.limit => pair.q,
                _ => {
                    self.done = true;
                    self.limit - 1
                }
            };
            if hi > self.last_q {
                let parts = self.block(hi)?;
                self.queue.extend(parts);
            }
            self.last_q = hi;
            if !self.done {
                self.level += 1;
            }
        }
        Ok(())
    }
}

impl<I: Iterator<Item = Result<TwinPair>>> Iterator for SignIntervals<I> {
    type Item = Result<SignInterval>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Err(e) = self.refill() {
                self.done = true;
                self.queue.clear();
                return Some(Err(e));
            }
            match self.queue.pop_front() {
                Some(iv) => match self.pending {
                    Some(ref mut p) if p.sign == iv.sign && p.n_end + 1 == iv.n_start => {
                        p.n_end = iv.n_end;
                    }
                    _ => {
                        if let Some(out) = self.pending.replace(iv) {
                            return Some(Ok(out));
                        }
                    }
                },
                None => return self.pending.take().map(Ok),
            }
        }
    }
}

/// Sign intervals of `d2` over `[2, limit)` from a fresh sieve.
pub fn sign_intervals(
    limit: u64,
    method: Li2Method,
    convention: Li2Convention,
    segment_length: u64,
    workers: usize,
) -> Result<SignIntervals<impl Iterator<Item = Result<TwinPair>>>> {
    let segs = segments(2, limit.max(3), segment_length, workers)?;
    Ok(SignIntervals::new(
        enumerate_twins(segs),
        limit,
        SmoothEvaluator::new(method, convention),
    ))
}

/// Geometric grid `base * ratio^n` up to and including `limit`.
pub fn density_grid(base: f64, ratio: f64, limit: u64) -> Result<Vec<f64>> {
    if !(base > 0.0) || !(ratio > 1.0) {
        return Err(Error::domain(
            "density_grid",
            format!("need base > 0 and ratio > 1, got {base}, {ratio}"),
        ));
    }
    let mut out = Vec::new();
    for n in 0.. {
        let x = base * ratio.powi(n);
        if x > limit as f64 {
            break;
        }
        out.push(x);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySample {
    pub x: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
}

impl DensitySample {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{}",
            fmt_real(self.x),
            fmt_real(self.delta_plus),
            fmt_real(self.delta_minus)
        )
    }
}

/// Accumulates `1/n` over the intervals and emits `delta_plus`,
/// `delta_minus` at each grid point `x`, summing over `2 <= n < floor(x)`.
/// Negative integers count from [`NEGATIVE_FROM`] on.
pub fn running_densities<I>(intervals: I, grid: &[f64], threshold: u64) -> Result<Vec<DensitySample>>
where
    I: IntoIterator<Item = Result<SignInterval>>,
{
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("running_densities", "grid is not ascending"));
    }
    if grid.first().is_some_and(|&x| !(x > 1.0)) {
        return Err(Error::domain("running_densities", "grid points must exceed 1"));
    }
    let mut acc = Blocks {
        plus: KahanSum::new(),
        minus: KahanSum::new(),
        threshold,
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut g = 0;
    let mut covered = 1;
    for iv in intervals {
        let iv = iv?;
        let mut start = iv.n_start;
        while g < grid.len() {
            let last = grid[g].floor() as u64 - 1;
            if last > iv.n_end {
                break;
            }
            acc.add(start, last, iv.sign)?;
            start = start.max(last + 1);
            out.push(acc.sample(grid[g]));
            g += 1;
        }
        acc.add(start, iv.n_end, iv.sign)?;
        covered = iv.n_end;
    }
    for &x in &grid[g..] {
        if x.floor() as u64 - 1 > covered {
            return Err(Error::precondition(
                "running_densities",
                format!("grid point {x} beyond the intervals, which end at {covered}"),
            ));
        }
        out.push(acc.sample(x));
    }
    Ok(out)
}

struct Blocks {
    plus: KahanSum<f64>,
    minus: KahanSum<f64>,
    threshold: u64,
}

impl Blocks {
    fn add(&mut self, a: u64, b: u64, sign: i8) -> Result<()> {
        let a = if sign < 0 { a.max(NEGATIVE_FROM) } else { a };
        if a > b || sign == 0 {
            return Ok(());
        }
        let h = harmonic_sum_with(a, b, self.threshold)?;
        if sign > 0 {
            self.plus.add(h)
        } else {
            self.minus.add(h)
        }
        Ok(())
    }

    fn sample(&self, x: f64) -> DensitySample {
        let l = x.ln();
        DensitySample {
            x,
            delta_plus: self.plus.value() / l,
            delta_minus: self.minus.value() / l,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityConfig {
    pub method: Li2Method,
    pub convention: Li2Convention,
    pub grid_base: f64,
    pub grid_ratio: f64,
    pub detemple_threshold: u64,
    pub segment_length: u64,
    pub workers: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            method: Li2Method::default(),
            convention: Li2Convention::default(),
            grid_base: 100.0,
            grid_ratio: 1.001,
            detemple_threshold: DEFAULT_DETEMPLE_THRESHOLD,
            segment_length: DEFAULT_SEGMENT_LENGTH,
            workers: 1,
        }
    }
}

/// Densities on the configured grid up to `limit`.
pub fn densities(limit: u64, config: &DensityConfig) -> Result<Vec<DensitySample>> {
    let grid = density_grid(config.grid_base, config.grid_ratio, limit)?;
    let ivs = sign_intervals(
        limit,
        config.method,
        config.convention,
        config.segment_length,
        config.workers,
    )?;
    running_densities(ivs, &grid, config.detemple_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_trivial_and_domain() {
        assert_eq!(harmonic_sum(1, 1).unwrap(), 1.0);
        assert!(harmonic_sum(0, 3).is_err());
        assert!(harmonic_sum(5, 4).is_err());
        assert!(harmonic_detemple(5, 4).is_err());
    }

    #[test]
    fn harmonic_block_oracle() {
        let want = 0.700_653_430_481_824_2;
        assert!((harmonic_direct(100, 200).unwrap() - want).abs() < 1e-15);
        let d = harmonic_detemple(100, 200).unwrap();
        assert!((d - want).abs() < 1e-4);
        assert!((harmonic_sum_with(100, 200, 50).unwrap() - d).abs() == 0.0);
    }

    #[test]
    fn detemple_at_a_billion() {
        let want = 0.693_147_181_309_945_3;
        let got = harmonic_detemple(1_000_000_000, 2_000_000_000).unwrap();
        assert!((got - want).abs() < 3e-16, "{got}");
    }

    #[test]
    fn small_intervals_by_hand() {
        let ivs: Vec<_> = sign_intervals(30, Li2Method::Series, Li2Convention::OffsetCorrected, 1 << 10, 1)
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(ivs[0], SignInterval { n_start: 2, n_end: 2, sign: 0 });
        assert_eq!(ivs.last().unwrap().n_end, 29);
        for w in ivs.windows(2) {
            assert_eq!(w[0].n_end + 1, w[1].n_start);
            assert_ne!(w[0].sign, w[1].sign);
        }
    }

    #[test]
    fn crossing_is_monotone_in_level() {
        let eval = SmoothEvaluator::new(Li2Method::Series, Li2Convention::OffsetCorrected);
        let a = integer_crossing(1, 2, 100, &eval).unwrap().unwrap();
        let b = integer_crossing(2, 2, 100, &eval).unwrap().unwrap();
        assert!(a <= b);
        let scan = (3..=100).find(|&n| eval.at(n).unwrap() >= 1.0).unwrap();
        assert_eq!(a, scan);
        assert_eq!(integer_crossing(1000, 2, 100, &eval).unwrap(), None);
        assert!(integer_crossing(1, 10, 10, &eval).is_err());
    }

    #[test]
    fn grid_checks() {
        assert!(density_grid(100.0, 1.0, 1000).is_err());
        assert!(density_grid(100.0, 1.001, 99).unwrap().is_empty());
        let g = density_grid(100.0, 1.001, 1000).unwrap();
        assert!(g.last().copied().unwrap() <= 1000.0);
        let bad = [200.0, 100.0];
        assert!(running_densities(std::iter::empty(), &bad, 10).is_err());
    }
}
