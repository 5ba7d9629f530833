use std::collections::BTreeSet;
use std::path::PathBuf;

use super::envelope::{EnvelopeEvents, EnvelopeSample};
use super::records::nu2_at;
use super::{checkpoint_save, CensusState, Li2Method, SignChangeRecord};
use crate::error::Result;
use crate::li::{
    li2_from_li, li2_quadrature, li_quadrature, Li2Convention, QuadratureRule, TWIN_CONSTANT,
};
use crate::sieve::{OrderedSegments, Segment, TwinPair, DEFAULT_SEGMENT_LENGTH};

#[derive(Debug, Clone)]
pub struct CensusConfig {
    pub method: Li2Method,
    pub convention: Li2Convention,
    pub segment_length: u64,
    /// Sieve threads. Results do not depend on this.
    pub workers: usize,
    /// Extra `T` values for the `nu2` table besides powers of two.
    pub extra_checkpoints: Vec<u64>,
    /// Ascending points at which `(|d2|, Delta2, d, Delta)` are sampled.
    pub envelope_grid: Vec<f64>,
    /// Geometric thinning ratio for envelope-increase events; values `<= 1`
    /// keep every event.
    pub event_ratio: f64,
    pub checkpoint_path: Option<PathBuf>,
    /// Save a checkpoint each time the census passes a multiple of this many
    /// numbers (0 saves only at the end).
    pub checkpoint_every: u64,
    /// Call the progress hook each time the census passes a multiple of this
    /// many numbers (0 disables).
    pub progress_every: u64,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self {
            method: Li2Method::Quadrature,
            convention: Li2Convention::OffsetCorrected,
            segment_length: DEFAULT_SEGMENT_LENGTH,
            workers: 1,
            extra_checkpoints: Vec::new(),
            envelope_grid: Vec::new(),
            event_ratio: 1.001,
            checkpoint_path: None,
            checkpoint_every: 0,
            progress_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CensusResult {
    /// Sign changes found by this run, in order.
    pub records: Vec<SignChangeRecord>,
    /// `(T, nu2(T))` at every power of two and extra checkpoint in
    /// `(start, limit]`, where `start` is the boundary the run began at.
    pub nu2: Vec<(u64, u64)>,
    pub state: CensusState,
    pub envelope: Vec<EnvelopeSample>,
    /// Thinned points where `Delta2` increased.
    pub delta2_events: EnvelopeEvents,
    /// Thinned points where `Delta` increased.
    pub delta_events: EnvelopeEvents,
}

/// Per-segment work done off the ordered path.
struct SegmentWork {
    hi: u64,
    primes: Vec<u64>,
    /// `li_panels[i]` integrates `1/log u` from `primes[i-1]` to `primes[i]`;
    /// entry 0 is unused.
    li_panels: Vec<f64>,
    /// Twins with both members in the segment: `(p, term)` where `term` is
    /// the `Li2` integral from the previous in-segment twin's `q` (quadrature;
    /// NaN for the first) or `Li2(q)` (series).
    twins: Vec<(u64, u64, f64)>,
}

fn prepare(seg: Segment, method: Li2Method, convention: Li2Convention, rule: &QuadratureRule<f64>) -> Result<SegmentWork> {
    let primes: Vec<u64> = seg.primes().collect();
    let mut li_panels = Vec::with_capacity(primes.len());
    let mut twins = Vec::new();
    let mut prev_q: Option<u64> = None;
    for (i, &p) in primes.iter().enumerate() {
        if i == 0 {
            li_panels.push(f64::NAN);
            continue;
        }
        let a = primes[i - 1];
        li_panels.push(li_quadrature(a as f64, p as f64, rule)?);
        if p == a + 2 && a >= 3 {
            let term = match method {
                Li2Method::Quadrature => match prev_q {
                    Some(pq) => li2_quadrature(pq as f64, p as f64, rule)?,
                    None => f64::NAN,
                },
                Li2Method::Series => li2_from_li(p as f64, convention)?,
            };
            twins.push((a, prev_q.unwrap_or(0), term));
            prev_q = Some(p);
        }
    }
    Ok(SegmentWork {
        hi: seg.hi(),
        primes,
        li_panels,
        twins,
    })
}

/// Runs the census over `(1, limit)` from the initial state.
pub fn run_census(limit: u64, config: &CensusConfig) -> Result<CensusResult> {
    let state = CensusState::new(config.method, config.convention);
    resume_census(state, limit, config, &mut |_| {})
}

/// What a run has produced so far, handed to the progress hook.
pub struct Progress<'a> {
    pub state: &'a CensusState,
    pub records: &'a [SignChangeRecord],
    pub envelope: &'a [EnvelopeSample],
    pub delta2_events: &'a EnvelopeEvents,
    pub delta_events: &'a EnvelopeEvents,
}

/// Continues a census from `state` up to `limit`. `on_progress` is called
/// every `config.progress_every` numbers, before the periodic checkpoint is
/// written. Envelope samples above `state.prime_cursor` are computed again,
/// so a caller joining two runs drops the earlier run's samples there.
pub fn resume_census(
    mut state: CensusState,
    limit: u64,
    config: &CensusConfig,
    on_progress: &mut dyn FnMut(&Progress<'_>),
) -> Result<CensusResult> {
    let rule = QuadratureRule::<f64>::gauss_legendre_10();
    let start = state.boundary;
    let prior_changes = state.change_count;
    let mut records = Vec::new();
    let mut sampler = Sampler::new(&config.envelope_grid, state.prime_cursor, limit);
    let mut delta2_events = EnvelopeEvents::new(config.event_ratio);
    let mut delta_events = EnvelopeEvents::new(config.event_ratio);
    let mut next_save = next_multiple(state.boundary, config.checkpoint_every);
    let mut next_progress = next_multiple(state.boundary, config.progress_every);

    if limit > state.boundary {
        let method = state.method;
        let convention = state.convention;
        let work = OrderedSegments::new(
            state.boundary,
            limit,
            config.segment_length,
            config.workers,
            move |seg| prepare(seg, method, convention, &rule),
        )?;
        for w in work {
            let w = w?;
            let mut twin_terms = w.twins.iter().peekable();
            for (i, &p) in w.primes.iter().enumerate() {
                sampler.emit_before(p, &state, &rule)?;
                if state.prime_cursor >= 3 && p == state.prime_cursor + 2 {
                    let pair = TwinPair::new(state.prime_cursor);
                    let pre = twin_terms.next_if(|t| t.0 == pair.p);
                    let term = match (state.method, pre) {
                        (Li2Method::Series, Some(&(_, _, v))) => v,
                        (Li2Method::Quadrature, Some(&(_, prev_q, v))) if prev_q == state.x_cursor && !v.is_nan() => v,
                        (Li2Method::Quadrature, _) => li2_quadrature(state.x_cursor as f64, pair.q as f64, &rule)?,
                        (Li2Method::Series, None) => li2_from_li(pair.q as f64, state.convention)?,
                    };
                    let before = state.delta2_max;
                    if let Some(r) = state.advance_with(pair, term)? {
                        records.push(r);
                    }
                    if state.delta2_max > before {
                        delta2_events.push(pair.q as f64, state.delta2_max);
                    }
                }
                let before = state.delta_max;
                if i > 0 {
                    state.observe_prime_with(p, w.li_panels[i]);
                } else {
                    state.observe_prime(p, &rule)?;
                }
                if state.delta_max > before {
                    delta_events.push(p as f64, state.delta_max);
                }
            }
            state.boundary = w.hi;
            if config.progress_every > 0 && state.boundary >= next_progress {
                on_progress(&Progress {
                    state: &state,
                    records: &records,
                    envelope: &sampler.samples,
                    delta2_events: &delta2_events,
                    delta_events: &delta_events,
                });
                next_progress = next_multiple(state.boundary, config.progress_every);
            }
            if let Some(path) = &config.checkpoint_path {
                if config.checkpoint_every > 0 && state.boundary >= next_save && state.boundary < limit {
                    checkpoint_save(&state, path)?;
                    next_save = next_multiple(state.boundary, config.checkpoint_every);
                }
            }
        }
    }
    sampler.emit_rest(&state, &rule)?;
    if let Some(path) = &config.checkpoint_path {
        checkpoint_save(&state, path)?;
    }

    let mut ts: BTreeSet<u64> = (1..64)
        .map(|k| 1u64 << k)
        .take_while(|&t| t <= limit)
        .collect();
    ts.extend(config.extra_checkpoints.iter().copied().filter(|&t| t <= limit));
    let nu2 = ts
        .into_iter()
        .filter(|&t| t > start)
        .map(|t| (t, prior_changes + nu2_at(&records, t)))
        .collect();

    Ok(CensusResult {
        records,
        nu2,
        state,
        envelope: sampler.samples,
        delta2_events,
        delta_events,
    })
}

fn next_multiple(x: u64, step: u64) -> u64 {
    if step == 0 {
        u64::MAX
    } else {
        (x / step + 1).saturating_mul(step)
    }
}

/// Emits envelope samples at grid points as the census passes them.
struct Sampler<'g> {
    grid: &'g [f64],
    pos: usize,
    limit: u64,
    samples: Vec<EnvelopeSample>,
}

impl<'g> Sampler<'g> {
    /// Grid points up to `prime_cursor` were sampled by an earlier run and
    /// are skipped.
    fn new(grid: &'g [f64], prime_cursor: u64, limit: u64) -> Self {
        Self {
            grid,
            pos: grid.partition_point(|&g| g < 2.0 || g <= prime_cursor as f64),
            limit,
            samples: Vec::new(),
        }
    }

    /// Emits every pending grid point `g <= next_prime`. At that moment all
    /// primes below `g` have been folded in.
    #[inline]
    fn emit_before(
        &mut self,
        next_prime: u64,
        state: &CensusState,
        rule: &QuadratureRule<f64>,
    ) -> Result<()> {
        while let Some(&g) = self.grid.get(self.pos) {
            if g > next_prime as f64 {
                break;
            }
            self.sample(g, state, rule)?;
        }
        Ok(())
    }

    fn emit_rest(&mut self, state: &CensusState, rule: &QuadratureRule<f64>) -> Result<()> {
        while let Some(&g) = self.grid.get(self.pos) {
            if g > self.limit as f64 || g > state.boundary as f64 {
                break;
            }
            self.sample(g, state, rule)?;
        }
        Ok(())
    }

    fn sample(&mut self, g: f64, state: &CensusState, rule: &QuadratureRule<f64>) -> Result<()> {
        self.pos += 1;
        let li2 = match state.method {
            Li2Method::Quadrature => {
                let from = state.x_cursor as f64;
                state.li2.value() + TWIN_CONSTANT * li2_quadrature(from, g.max(from), rule)?
            }
            Li2Method::Series => TWIN_CONSTANT * li2_from_li(g, state.convention)?,
        };
        let from = state.prime_cursor.max(2) as f64;
        let li = state.li.value() + li_quadrature(from, g.max(from), rule)?;
        let d2 = state.twin_count as f64 - li2;
        let d = li - state.prime_count as f64;
        self.samples.push(EnvelopeSample {
            x: g,
            d2,
            delta2: state.delta2_max.max(d2.abs()),
            d,
            delta: state.delta_max.max(d.abs()),
        });
        Ok(())
    }
}

/// Disagreements between the record lists of two methods.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MethodDiff {
    /// Twin pairs `(p, q)` carrying a sign change only in the first list.
    pub only_first: Vec<(u64, u64)>,
    /// Twin pairs carrying a sign change only in the second list.
    pub only_second: Vec<(u64, u64)>,
}

impl MethodDiff {
    pub fn between(first: &[SignChangeRecord], second: &[SignChangeRecord]) -> Self {
        let a: BTreeSet<(u64, u64)> = first.iter().map(|r| (r.p, r.q)).collect();
        let b: BTreeSet<(u64, u64)> = second.iter().map(|r| (r.p, r.q)).collect();
        Self {
            only_first: a.difference(&b).copied().collect(),
            only_second: b.difference(&a).copied().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.only_first.is_empty() && self.only_second.is_empty()
    }

    pub fn len(&self) -> usize {
        self.only_first.len() + self.only_second.len()
    }

    /// Smallest disagreeing pair.
    pub fn first(&self) -> Option<(u64, u64)> {
        self.only_first
            .first()
            .into_iter()
            .chain(self.only_second.first())
            .min()
            .copied()
    }

    /// All disagreeing pairs in ascending order, tagged with the list they
    /// appear in (`1` or `2`).
    pub fn positions(&self) -> Vec<(u64, u64, u8)> {
        let mut v: Vec<(u64, u64, u8)> = self
            .only_first
            .iter()
            .map(|&(p, q)| (p, q, 1))
            .chain(self.only_second.iter().map(|&(p, q)| (p, q, 2)))
            .collect();
        v.sort_unstable();
        v
    }
}
