//! Bit-packed segmented sieve of Eratosthenes and the twin-pair stream.
//!
//! Segments store odd numbers only; bit `k` of a segment starting at `lo`
//! stands for `first_odd(lo) + 2k`. The prime 2 has no bit and is reported
//! by [`Segment::contains_two`].

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_SEGMENT_LENGTH: u64 = 1 << 20;

/// A twin-prime pair `(p, p + 2)` with `p >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TwinPair {
    pub p: u64,
    pub q: u64,
}

impl TwinPair {
    /// Builds a pair from its lower member. Primality is not re-checked.
    #[inline]
    pub fn new(p: u64) -> Self {
        Self { p, q: p + 2 }
    }
}

/// All primes `<= limit`, ascending.
pub fn base_primes(limit: u64) -> Result<Vec<u64>> {
    if limit < 2 {
        return Err(Error::domain("base_primes", format!("limit {limit} < 2")));
    }
    let seg = sieve_small(limit + 1);
    Ok(seg.primes().collect())
}

/// Sieves `[2, hi)` without external base primes.
fn sieve_small(hi: u64) -> Segment {
    let n_odd = odd_count(3, hi);
    let mut bits = vec![!0u64; words_for(n_odd)];
    clear_tail(&mut bits, n_odd);
    // bit k <-> 3 + 2k
    let mut k = 0usize;
    while k < n_odd {
        let p = 3 + 2 * k as u64;
        if p * p >= hi {
            break;
        }
        if bits[k / 64] >> (k % 64) & 1 == 1 {
            let mut m = ((p * p - 3) / 2) as usize;
            while m < n_odd {
                bits[m / 64] &= !(1u64 << (m % 64));
                m += p as usize;
            }
        }
        k += 1;
    }
    Segment {
        lo: 2,
        hi,
        first_odd: 3,
        n_odd,
        bits,
        carry: None,
    }
}

#[inline]
fn first_odd_at_least(lo: u64) -> u64 {
    lo | 1
}

#[inline]
fn odd_count(first_odd: u64, hi: u64) -> usize {
    if hi > first_odd {
        ((hi - first_odd + 1) / 2) as usize
    } else {
        0
    }
}

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

fn clear_tail(bits: &mut [u64], n: usize) {
    if n % 64 != 0 {
        if let Some(last) = bits.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
}

/// Integer square root, exact for all `u64`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).map_or(true, |sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Primality bitmap for the window `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    lo: u64,
    hi: u64,
    first_odd: u64,
    n_odd: usize,
    bits: Vec<u64>,
    carry: Option<u64>,
}

impl Segment {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    /// Largest prime below `lo`, when the producer knows it.
    pub fn carry(&self) -> Option<u64> {
        self.carry
    }

    pub fn with_carry(mut self, carry: Option<u64>) -> Self {
        self.carry = carry;
        self
    }

    pub fn contains_two(&self) -> bool {
        self.lo <= 2 && 2 < self.hi
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n < self.lo || n >= self.hi {
            return false;
        }
        if n == 2 {
            return true;
        }
        if n % 2 == 0 || n < self.first_odd {
            return false;
        }
        let k = ((n - self.first_odd) / 2) as usize;
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    /// Primes in the window, ascending.
    pub fn primes(&self) -> SegmentPrimes<'_> {
        SegmentPrimes {
            seg: self,
            two_pending: self.contains_two(),
            word: 0,
            current: self.bits.first().copied().unwrap_or(0),
        }
    }

    /// Largest prime in the window.
    pub fn last_prime(&self) -> Option<u64> {
        for (w, &word) in self.bits.iter().enumerate().rev() {
            if word != 0 {
                let k = w * 64 + 63 - word.leading_zeros() as usize;
                return Some(self.first_odd + 2 * k as u64);
            }
        }
        self.contains_two().then_some(2)
    }
}

pub struct SegmentPrimes<'a> {
    seg: &'a Segment,
    two_pending: bool,
    word: usize,
    current: u64,
}

impl Iterator for SegmentPrimes<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.two_pending {
            self.two_pending = false;
            return Some(2);
        }
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let k = self.word * 64 + tz;
                return Some(self.seg.first_odd + 2 * k as u64);
            }
            self.word += 1;
            if self.word >= self.seg.bits.len() {
                return None;
            }
            self.current = self.seg.bits[self.word];
        }
    }
}

/// Checks that `base` covers every prime up to `bound`.
fn check_base(base: &[u64], bound: u64) -> Result<()> {
    if bound < 2 {
        return Ok(());
    }
    let last = base.last().copied().unwrap_or(1);
    if last >= bound {
        return Ok(());
    }
    // Any prime in (last, bound] is missing. Candidates there are below
    // last^2 or found quickly, so trial division by `base` settles it.
    for n in last + 1..=bound {
        let composite = base
            .iter()
            .take_while(|&&p| p * p <= n)
            .any(|&p| n % p == 0);
        if !composite {
            return Err(Error::precondition(
                "sieve_segment",
                format!("base primes end at {last} but prime {n} <= sqrt bound {bound} is missing"),
            ));
        }
    }
    Ok(())
}

/// Sieves the window `[lo, hi)` with the given base primes, which must contain
/// every prime up to `isqrt(hi - 1)`.
pub fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Result<Segment> {
    if lo < 2 {
        return Err(Error::domain("sieve_segment", format!("lo {lo} < 2")));
    }
    if hi < lo {
        return Err(Error::domain("sieve_segment", format!("hi {hi} < lo {lo}")));
    }
    let first_odd = first_odd_at_least(lo);
    if hi == lo {
        return Ok(Segment {
            lo,
            hi,
            first_odd,
            n_odd: 0,
            bits: Vec::new(),
            carry: None,
        });
    }
    check_base(base, isqrt(hi - 1))?;
    Ok(sieve_unchecked(lo, hi, base))
}

fn sieve_unchecked(lo: u64, hi: u64, base: &[u64]) -> Segment {
    let first_odd = first_odd_at_least(lo);
    let n_odd = odd_count(first_odd, hi);
    let mut bits = vec![!0u64; words_for(n_odd)];
    clear_tail(&mut bits, n_odd);
    for &p in base.iter().skip_while(|&&p| p == 2) {
        let sq = p * p;
        if sq >= hi {
            break;
        }
        let mut start = if sq >= lo { sq } else { lo.div_ceil(p) * p };
        if start % 2 == 0 {
            start += p;
        }
        if start >= hi {
            continue;
        }
        let mut k = ((start - first_odd) / 2) as usize;
        let step = p as usize;
        while k < n_odd {
            bits[k >> 6] &= !(1u64 << (k & 63));
            k += step;
        }
    }
    Segment {
        lo,
        hi,
        first_odd,
        n_odd,
        bits,
        carry: None,
    }
}

/// Number of primes in the segment.
pub fn count_primes(segment: &Segment) -> u64 {
    let odd: u64 = segment.bits.iter().map(|w| w.count_ones() as u64).sum();
    odd + segment.contains_two() as u64
}

/// Splits `[lo, hi)` into windows of `segment_length`, sieves them on up to
/// `workers` threads and yields `f(segment)` strictly in ascending order.
///
/// Each segment carries the largest prime of its predecessor (for windows
/// after the first, the carry of the first is supplied by the caller).
pub struct OrderedSegments<F, R> {
    base: std::sync::Arc<Vec<u64>>,
    next_lo: u64,
    hi: u64,
    segment_length: u64,
    batch: usize,
    pool: Option<rayon::ThreadPool>,
    f: F,
    ready: VecDeque<R>,
}

impl<F, R> OrderedSegments<F, R>
where
    F: Fn(Segment) -> R + Sync,
    R: Send,
{
    pub fn new(lo: u64, hi: u64, segment_length: u64, workers: usize, f: F) -> Result<Self> {
        if lo < 2 {
            return Err(Error::domain("segments", format!("lo {lo} < 2")));
        }
        if segment_length < 64 {
            return Err(Error::domain(
                "segments",
                format!("segment length {segment_length} < 64"),
            ));
        }
        let workers = workers.max(1);
        let base = base_primes(isqrt(hi.max(4) - 1).max(2))?;
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::precondition("segments", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            base: std::sync::Arc::new(base),
            next_lo: lo,
            hi,
            segment_length,
            batch: workers * 2,
            pool,
            f,
            ready: VecDeque::new(),
        })
    }

    fn refill(&mut self) {
        let mut windows = Vec::with_capacity(self.batch);
        while windows.len() < self.batch && self.next_lo < self.hi {
            let end = (self.next_lo + self.segment_length).min(self.hi);
            windows.push((self.next_lo, end));
            self.next_lo = end;
        }
        let base = &self.base;
        let f = &self.f;
        let work = |&(lo, hi): &(u64, u64)| f(sieve_unchecked(lo, hi, base));
        let out: Vec<R> = match &self.pool {
            Some(pool) => pool.install(|| windows.par_iter().map(work).collect()),
            None => windows.iter().map(work).collect(),
        };
        self.ready.extend(out);
    }
}

impl<F, R> Iterator for OrderedSegments<F, R>
where
    F: Fn(Segment) -> R + Sync,
    R: Send,
{
    type Item = R;

    fn next(&mut self) -> Option<R> {
        if self.ready.is_empty() {
            self.refill();
        }
        self.ready.pop_front()
    }
}

/// Segments covering `[lo, hi)` in order, each annotated with the carry
/// prime of its predecessor.
pub fn segments(
    lo: u64,
    hi: u64,
    segment_length: u64,
    workers: usize,
) -> Result<impl Iterator<Item = Segment>> {
    let inner = OrderedSegments::new(lo, hi, segment_length, workers, |s| s)?;
    let mut carry = None;
    Ok(inner.map(move |s: Segment| {
        let last = s.last_prime().or(carry);
        let s = s.with_carry(carry);
        carry = last;
        s
    }))
}

/// Emits twin pairs from an ascending, contiguous stream of segments.
pub struct TwinStream<I> {
    segments: I,
    expected_lo: Option<u64>,
    prev_prime: Option<u64>,
    pending: VecDeque<TwinPair>,
    failed: bool,
}

/// Twin pairs `(p, p + 2)` found in the stream. A pair straddling two
/// segments is emitted once, when its upper member is seen.
pub fn enumerate_twins<I: IntoIterator<Item = Segment>>(segments: I) -> TwinStream<I::IntoIter> {
    TwinStream {
        segments: segments.into_iter(),
        expected_lo: None,
        prev_prime: None,
        pending: VecDeque::new(),
        failed: false,
    }
}

impl<I: Iterator<Item = Segment>> Iterator for TwinStream<I> {
    type Item = Result<TwinPair>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(t) = self.pending.pop_front() {
                return Some(Ok(t));
            }
            if self.failed {
                return None;
            }
            let seg = self.segments.next()?;
            match self.expected_lo {
                None => {
                    if seg.lo() != 2 && seg.carry().is_none() {
                        self.failed = true;
                        return Some(Err(Error::StreamIntegrity(format!(
                            "first segment starts at {} without a carry prime",
                            seg.lo()
                        ))));
                    }
                    self.prev_prime = seg.carry();
                }
                Some(lo) if lo != seg.lo() => {
                    self.failed = true;
                    return Some(Err(Error::StreamIntegrity(format!(
                        "segment starts at {} but previous ended at {lo}",
                        seg.lo()
                    ))));
                }
                Some(_) => {}
            }
            self.expected_lo = Some(seg.hi());
            for prime in seg.primes() {
                if let Some(prev) = self.prev_prime {
                    if prime == prev + 2 && prev >= 3 {
                        self.pending.push_back(TwinPair::new(prev));
                    }
                }
                self.prev_prime = Some(prime);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn base_primes_small() {
        assert_eq!(base_primes(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(base_primes(2).unwrap(), vec![2]);
        assert_eq!(base_primes(3).unwrap(), vec![2, 3]);
        assert!(matches!(base_primes(1), Err(Error::Domain { .. })));
    }

    #[test]
    fn base_primes_to_a_million() {
        let primes = base_primes(1_000_000).unwrap();
        assert_eq!(primes.len(), 78_498);
        assert!(primes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn segment_from_two() {
        let base = base_primes(5).unwrap();
        let seg = sieve_segment(2, 30, &base).unwrap();
        let got: Vec<u64> = seg.primes().collect();
        assert_eq!(got, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(count_primes(&seg), 10);
        assert_eq!(seg.last_prime(), Some(29));
    }

    #[test]
    fn segment_window_with_base_ending_below_sqrt() {
        // sqrt(1_010_000) ~ 1004.99; 997 is the last base prime but no prime
        // lies in (997, 1004], so the base is complete.
        let base = base_primes(1000).unwrap();
        let seg = sieve_segment(1_000_000, 1_010_000, &base).unwrap();
        assert_eq!(count_primes(&seg), 753);
        let brute = (1_000_000..1_010_000u64).filter(|&n| trial_division(n)).count();
        assert_eq!(brute, 753);
    }

    #[test]
    fn empty_and_odd_bounds() {
        let base = base_primes(100).unwrap();
        let seg = sieve_segment(50, 50, &base).unwrap();
        assert!(seg.is_empty());
        assert_eq!(count_primes(&seg), 0);
        assert_eq!(seg.primes().count(), 0);
        let seg = sieve_segment(3, 4, &base).unwrap();
        assert_eq!(seg.primes().collect::<Vec<_>>(), vec![3]);
        let seg = sieve_segment(2, 3, &base).unwrap();
        assert_eq!(seg.primes().collect::<Vec<_>>(), vec![2]);
        let seg = sieve_segment(24, 29, &base).unwrap();
        assert_eq!(seg.primes().count(), 0);
        assert_eq!(seg.last_prime(), None);
    }

    #[test]
    fn insufficient_base_is_rejected() {
        let base = vec![2, 3];
        assert!(matches!(
            sieve_segment(100, 200, &base),
            Err(Error::Precondition { .. })
        ));
        assert!(matches!(sieve_segment(1, 10, &base), Err(Error::Domain { .. })));
    }

    #[test]
    fn twins_below_hundred() {
        let segs = segments(2, 100, 64, 1).unwrap();
        let twins: Vec<u64> = enumerate_twins(segs).map(|t| t.unwrap().p).collect();
        assert_eq!(twins, vec![3, 5, 11, 17, 29, 41, 59, 71]);
    }

    #[test]
    fn twins_window_with_carry_and_split() {
        let base = base_primes(10).unwrap();
        let seg = sieve_segment(90, 100, &base).unwrap().with_carry(Some(89));
        assert_eq!(enumerate_twins(vec![seg]).count(), 0);

        let a = sieve_segment(2, 60, &base).unwrap();
        let b = sieve_segment(60, 100, &base).unwrap();
        let twins: Vec<u64> = enumerate_twins(vec![a, b]).map(|t| t.unwrap().p).collect();
        assert_eq!(twins.iter().filter(|&&p| p == 59).count(), 1);
        assert_eq!(twins.len(), 8);
    }

    #[test]
    fn non_contiguous_stream_errors() {
        let base = base_primes(10).unwrap();
        let a = sieve_segment(2, 40, &base).unwrap();
        let b = sieve_segment(50, 90, &base).unwrap();
        let out: Vec<_> = enumerate_twins(vec![a, b]).collect();
        assert!(matches!(out.last(), Some(Err(Error::StreamIntegrity(_)))));

        let c = sieve_segment(50, 90, &base).unwrap();
        let out: Vec<_> = enumerate_twins(vec![c]).collect();
        assert!(matches!(out[0], Err(Error::StreamIntegrity(_))));
    }

    #[test]
    fn isqrt_exact() {
        for n in [0u64, 1, 2, 3, 4, 15, 16, 17, 99, 100, u64::MAX, (1 << 52) + 1] {
            let r = isqrt(n);
            assert!(r as u128 * r as u128 <= n as u128);
            assert!((r as u128 + 1) * (r as u128 + 1) > n as u128);
        }
    }

    #[test]
    fn parallel_segments_match_sequential() {
        let seq: Vec<u64> = segments(2, 200_000, 1 << 10, 1)
            .unwrap()
            .map(|s| count_primes(&s))
            .collect();
        let par: Vec<u64> = segments(2, 200_000, 1 << 10, 4)
            .unwrap()
            .map(|s| count_primes(&s))
            .collect();
        assert_eq!(seq, par);
        assert_eq!(seq.iter().sum::<u64>(), 17_984);
    }
}
