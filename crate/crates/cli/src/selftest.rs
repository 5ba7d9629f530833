use twinskew::census::{run_census, CensusConfig};
use twinskew::density::{harmonic_detemple, harmonic_direct};
use twinskew::li::{
    li2_from_li, li2_quadrature, li_ramanujan, li_series, twin_constant, Li2Convention, QuadratureRule, LI_AT_2,
    SOLDNER, TWIN_CONSTANT,
};
use twinskew::Result;

struct Check {
    name: &'static str,
    value: f64,
    ok: bool,
}

fn checks() -> Result<Vec<Check>> {
    let rule = QuadratureRule::<f64>::gauss_legendre_10();
    let mut out = Vec::new();
    let mut push = |name, value: f64, ok| out.push(Check { name, value, ok });

    let v: f64 = li_ramanujan(SOLDNER)?.abs();
    push("li_soldner_zero", v, v < 1e-12);
    let v = (li_series(2.0)? - LI_AT_2).abs();
    push("li_at_two", v, v < 1e-14);
    let v = (li_series(1e6f64)? / li_ramanujan(1e6f64)? - 1.0).abs();
    push("li_series_vs_ramanujan", v, v < 1e-12);
    let v = (li2_from_li(1e6, Li2Convention::OffsetCorrected)? - li2_quadrature(2.0, 1e6, &rule)?).abs();
    push("li2_series_vs_quadrature", v, v < 1e-8);
    let v = (twin_constant::<f64>(100_000)? - TWIN_CONSTANT).abs();
    push("twin_constant", v, v < 1e-5);
    let v = (harmonic_detemple(10_000, 20_000)? - harmonic_direct(10_000, 20_000)?).abs();
    push("harmonic_detemple", v, v < 1e-8);

    let r = run_census(1 << 21, &CensusConfig::default())?;
    let nu2 = r.nu2.last().map_or(0, |e| e.1);
    push("nu2_2^21", nu2 as f64, nu2 == 29);
    let first = r.records.first().map_or(0, |x| x.p);
    push("first_sign_change", first as f64, first == 1_369_391);
    Ok(out)
}

/// Prints one `check=... status=...` line per check; true when all pass.
pub fn run() -> Result<bool> {
    let mut all = true;
    for c in checks()? {
        all &= c.ok;
        println!(
            "check={} status={} value={}",
            c.name,
            if c.ok { "ok" } else { "fail" },
            c.value
        );
    }
    Ok(all)
}
