//! One PASS/FAIL line per acceptance criterion. Criteria 3 and 4 need long
//! censuses and are ignored by default; run them with `--ignored`.

use std::sync::OnceLock;

use twinskew::analysis::{conjecture_compare, conjecture_reference, power_fit};
use twinskew::census::{
    checkpoint_load, checkpoint_save, run_census, CensusConfig, CensusResult, Direction, Li2Method, MethodDiff,
};
use twinskew::density::{
    density_grid, harmonic_detemple, harmonic_direct, harmonic_sum_with, running_densities, sign_intervals,
    SignInterval, NEGATIVE_FROM,
};
use twinskew::li::{
    li2_from_li, li2_quadrature, li_ramanujan, li_series, twin_constant, Li2Convention, QuadratureRule, SOLDNER,
    TWIN_CONSTANT,
};
use twinskew::sieve::{enumerate_twins, segments, TwinPair};
use twinskew::Kahan;

fn verdict(criterion: u32, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} criterion {criterion}: {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn census_2_30() -> &'static CensusResult {
    static R: OnceLock<CensusResult> = OnceLock::new();
    R.get_or_init(|| {
        let config = CensusConfig {
            envelope_grid: (1..=30).map(|k| 2f64.powi(k)).collect(),
            ..CensusConfig::default()
        };
        run_census(1 << 30, &config).unwrap()
    })
}

fn nu2_of(r: &CensusResult, k: u32) -> u64 {
    r.nu2.iter().find(|e| e.0 == 1u64 << k).unwrap().1
}

#[test]
fn criterion_1_table_prefix() {
    let r = census_2_30();
    let want = [29, 29, 29, 29, 29, 238, 854, 1226, 1226, 1226];
    let got: Vec<u64> = (21..=30).map(|k| nu2_of(r, k)).collect();
    verdict(1, got == want, &format!("nu2(2^21..2^30) = {got:?}, expected {want:?}"));
}

#[test]
fn criterion_2_first_crossing() {
    let r = census_2_30();
    let first = r.records.first().map(|x| (x.p, x.q));
    verdict(2, first == Some((1_369_391, 1_369_393)), &format!("first sign change at {first:?}"));
}

fn both_methods(limit: u64) -> (CensusResult, CensusResult) {
    let quad = run_census(limit, &CensusConfig::default()).unwrap();
    let series = run_census(
        limit,
        &CensusConfig {
            method: Li2Method::Series,
            ..CensusConfig::default()
        },
    )
    .unwrap();
    (quad, series)
}

#[test]
#[ignore = "extended: census to 2^32 with both methods"]
fn criterion_3_dual_methods() {
    let (q, s) = both_methods(1 << 32);
    let (nq, ns) = (nu2_of(&q, 32), nu2_of(&s, 32));
    let diff = MethodDiff::between(&q.records, &s.records);
    let near = diff
        .first()
        .is_some_and(|(p, _)| (p as i64 - 3_067_608_611i64).unsigned_abs() < 50_000_000);
    let ok = nq.abs_diff(2854) <= 2 && ns.abs_diff(2852) <= 2 && !diff.is_empty() && near;
    verdict(
        3,
        ok,
        &format!(
            "2^32: quadrature {nq} (paper 2854), series {ns} (paper 2852), {} disagreements, first at {:?} (paper 3067608611)",
            diff.len(),
            diff.first()
        ),
    );
}

#[test]
#[ignore = "extended: census to 2^34 with both methods"]
fn criterion_4_table_extended() {
    let (q, s) = both_methods(1 << 34);
    let vals = [nu2_of(&q, 33), nu2_of(&s, 33), nu2_of(&q, 34), nu2_of(&s, 34)];
    let ok = (7381..=7383).contains(&vals[0])
        && (7381..=7383).contains(&vals[1])
        && (9113..=9115).contains(&vals[2])
        && (9113..=9115).contains(&vals[3]);
    verdict(
        4,
        ok,
        &format!("nu2(2^33) = {} / {}, nu2(2^34) = {} / {} (quadrature / series)", vals[0], vals[1], vals[2], vals[3]),
    );
}

#[test]
fn criterion_5_evaluators() {
    let (lo, hi) = (1.1f64.ln(), 1e15f64.ln());
    let mut worst = 0.0f64;
    for i in 0..50 {
        let x = (lo + (hi - lo) * i as f64 / 49.0).exp();
        let a = li_series(x).unwrap();
        let b = li_ramanujan(x).unwrap();
        worst = worst.max(((a - b) / b).abs());
    }
    let at_mu = li_ramanujan(SOLDNER).unwrap().abs().max(li_series(SOLDNER).unwrap().abs());

    let rule = QuadratureRule::<f64>::gauss_legendre_10();
    let mut chained = Kahan::new();
    let mut a = 2.0f64;
    while a < 1e10 {
        let b = (a * 1.25).min(1e10);
        chained.add(li2_quadrature(a, b, &rule).unwrap());
        a = b;
    }
    let merged = li2_from_li(1e10, Li2Convention::OffsetCorrected).unwrap();
    let gap = (merged - chained.value()).abs();

    let ok = worst < 1e-12 && at_mu < 1e-12 && gap < 1e-8;
    verdict(
        5,
        ok,
        &format!("series vs Ramanujan worst rel {worst:.2e}; |li(mu)| = {at_mu:.2e}; Li2(1e10) series vs quadrature {gap:.2e}"),
    );
}

#[test]
fn criterion_6_twin_constant() {
    let c: f64 = twin_constant(1_000_000).unwrap();
    let err = (c - TWIN_CONSTANT).abs();
    verdict(6, err < 1e-6, &format!("twin_constant(1e6) = {c:.15}, off by {err:.2e}"));
}

#[test]
fn criterion_7_density_partition() {
    let limit = 2_000_000u64;
    let ivs: Vec<SignInterval> = sign_intervals(limit, Li2Method::Series, Li2Convention::OffsetCorrected, 1 << 16, 1)
        .unwrap()
        .map(Result::unwrap)
        .collect();

    // brute force: sign of d2(n) for every integer
    let twins: Vec<TwinPair> = enumerate_twins(segments(2, limit, 1 << 16, 1).unwrap())
        .map(Result::unwrap)
        .collect();
    let mut brute: Vec<SignInterval> = Vec::new();
    let mut below = 0usize;
    for n in 2..limit {
        while below < twins.len() && twins[below].q < n {
            below += 1;
        }
        let d2 = below as f64 - TWIN_CONSTANT * li2_from_li(n as f64, Li2Convention::OffsetCorrected).unwrap();
        let s = if d2 > 0.0 {
            1
        } else if d2 < 0.0 {
            -1
        } else {
            0
        };
        match brute.last_mut() {
            Some(last) if last.sign == s => last.n_end = n,
            _ => brute.push(SignInterval { n_start: n, n_end: n, sign: s }),
        }
    }
    let partition_ok = ivs == brute;

    let grid = density_grid(100.0, 1.001, limit).unwrap();
    let samples = running_densities(ivs.iter().map(|&iv| Ok(iv)), &grid, 10_000).unwrap();
    let mut worst = 0.0f64;
    for s in &samples {
        let top = s.x.floor() as u64 - 1;
        let h = harmonic_sum_with(NEGATIVE_FROM, top, 10_000).unwrap() / s.x.ln();
        worst = worst.max((s.delta_plus + s.delta_minus - h).abs());
    }
    verdict(
        7,
        partition_ok && worst < 1e-9 && samples.len() == grid.len(),
        &format!(
            "{} intervals, brute force {} intervals, equal = {partition_ok}; partition identity worst {worst:.2e} over {} grid points",
            ivs.len(),
            brute.len(),
            samples.len()
        ),
    );
}

#[test]
fn criterion_8_harmonic_shortcut() {
    let mut detail = Vec::new();
    let mut ok = true;
    for n in [100u64, 10_000, 1_000_000] {
        let diff = (harmonic_detemple(n, 2 * n).unwrap() - harmonic_direct(n, 2 * n).unwrap()).abs();
        let bound = 1.0 / (n as f64 * n as f64);
        ok &= diff < bound;
        detail.push(format!("n={n}: {diff:.2e} < {bound:.0e}"));
    }
    verdict(8, ok, &detail.join("; "));
}

// The sign-change column of the published table, T = 2^21 .. 2^48.
const PAPER_NU2: [u64; 28] = [
    29, 29, 29, 29, 29, 238, 854, 1226, 1226, 1226, 1226, 2854, 7383, 9115, 12682, 23634, 31641, 31641, 31641, 38899,
    55106, 90355, 161031, 161031, 161031, 405289, 472000, 477118,
];

#[test]
fn criterion_9_conjecture_report() {
    let r = |k: i32| conjecture_reference(2f64.powi(k)).unwrap().round() as u64;
    let refs = (r(21), r(35), r(48));
    let table: Vec<(u64, u64)> = (21..=48).zip(PAPER_NU2).map(|(k, v)| (1u64 << k, v)).collect();
    let report = conjecture_compare(&table).unwrap();
    let ok = refs == (99, 7641, 504_258) && report.crossings == 10;
    verdict(
        9,
        ok,
        &format!(
            "reference at 2^21, 2^35, 2^48 = {refs:?}; crossings over the table rows = {} (caption says 10)",
            report.crossings
        ),
    );
}

#[test]
fn criterion_10_properties() {
    let mut failures = Vec::new();

    let a: Vec<TwinPair> = enumerate_twins(segments(2, 1 << 22, 1 << 10, 1).unwrap())
        .map(Result::unwrap)
        .collect();
    let b: Vec<TwinPair> = enumerate_twins(segments(2, 1 << 22, 1 << 20, 2).unwrap())
        .map(Result::unwrap)
        .collect();
    if a != b {
        failures.push("segmentation changes the twin stream");
    }

    let r = census_2_30();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.ckpt");
    checkpoint_save(&r.state, &path).unwrap();
    let back = checkpoint_load(&path).unwrap();
    if back.li2.value().to_bits() != r.state.li2.value().to_bits()
        || back.li2.compensation().to_bits() != r.state.li2.compensation().to_bits()
        || back.twin_count != r.state.twin_count
        || back.delta2_max.to_bits() != r.state.delta2_max.to_bits()
    {
        failures.push("checkpoint round trip is not bit exact");
    }

    let alternating = r.records.windows(2).all(|w| w[0].direction != w[1].direction)
        && r.records.first().is_none_or(|f| f.direction == Direction::NegToPos);
    if !alternating {
        failures.push("record directions do not alternate");
    }

    if r.envelope.windows(2).any(|w| w[1].delta2 < w[0].delta2 || w[1].delta < w[0].delta) {
        failures.push("envelope decreases");
    }

    let pts: Vec<(f64, f64)> = (1..50).map(|i| (i as f64 * 1.7, 0.3 * (i as f64 * 1.7).powf(0.42))).collect();
    let f = power_fit(&pts).unwrap();
    if (f.coeff - 0.3).abs() > 1e-12 || (f.exponent - 0.42).abs() > 1e-12 {
        failures.push("power fit misses a noiseless power law");
    }

    verdict(
        10,
        failures.is_empty(),
        &if failures.is_empty() {
            format!(
                "segmentation, checkpoint, {} alternating records, {} envelope samples, power fit",
                r.records.len(),
                r.envelope.len()
            )
        } else {
            failures.join("; ")
        },
    );
}
