use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use twinskew::analysis::{
    conjecture_compare, power_fit, staircase_crossings, windowed_fit, PowerFit, REPORT_HEADER,
};
use twinskew::census::{
    checkpoint_load, nu2_table, read_records, resume_census, CensusConfig, CensusState, EnvelopeEvents,
    EnvelopeSample, Li2Method, MethodDiff, Progress, SignChangeRecord, ENVELOPE_HEADER, RECORDS_HEADER,
};
use twinskew::density::{densities, DensityConfig, DENSITIES_HEADER};
use twinskew::io::{csv_document, fmt_real, parse_field, read_csv, write_atomic};
use twinskew::Error;

use crate::config::{MethodChoice, RunArgs};
use crate::summary;

/// Progress lines and periodic checkpoints every this many numbers.
pub const PROGRESS_EVERY: u64 = 1 << 30;
/// Geometric bin ratio for envelope-increase events.
const EVENT_RATIO: f64 = 1.001;
/// Largest number of points handed to an envelope fit.
const FIT_POINTS: usize = 10_000;
/// First row of the published sign-change table.
const TABLE_START: u64 = 1 << 21;
/// Plotted `|d2|` values are raised to this floor.
const ABS_D2_FLOOR: f64 = 1e-2;

pub const NU2_HEADER: &str = "T,nu2";
pub const EVENTS_HEADER: &str = "kind,x,value";
pub const DIFF_HEADER: &str = "p,q,only_in";

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_numeric() => 3,
            Failure::Core(Error::Domain { .. } | Error::Precondition { .. }) => 1,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome = Result<(), Failure>;

fn file_name(stem: &str, method: Li2Method, choice: MethodChoice) -> String {
    if choice == MethodChoice::Both {
        format!("{stem}_{}.csv", method.name())
    } else {
        format!("{stem}.csv")
    }
}

fn checkpoint_file(args: &RunArgs, method: Li2Method) -> Option<PathBuf> {
    let path = args.checkpoint.as_ref()?;
    Some(if args.li2_method == MethodChoice::Both {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".{}", method.name()));
        path.with_file_name(name)
    } else {
        path.clone()
    })
}

struct MethodRun {
    method: Li2Method,
    records: Vec<SignChangeRecord>,
    state: CensusState,
    envelope: Vec<EnvelopeSample>,
    delta2_events: Vec<(f64, f64)>,
    delta_events: Vec<(f64, f64)>,
}

fn powers_of_two(limit: u64) -> Vec<u64> {
    (1..64).map(|k| 1u64 << k).take_while(|&t| t <= limit).collect()
}

fn table_points(args: &RunArgs) -> Vec<u64> {
    let mut ts: BTreeSet<u64> = powers_of_two(args.limit).into_iter().collect();
    ts.extend(args.checkpoint_at.iter().copied().filter(|&t| t >= 2 && t <= args.limit));
    ts.into_iter().collect()
}

fn rethin(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut e = EnvelopeEvents::new(EVENT_RATIO);
    for (x, v) in points {
        e.push(x, v);
    }
    e.points().to_vec()
}

/// Outputs of an interrupted run, cut at the checkpoint boundary.
struct Prior {
    records: Vec<SignChangeRecord>,
    envelope: Vec<EnvelopeSample>,
    delta2_events: Vec<(f64, f64)>,
    delta_events: Vec<(f64, f64)>,
}

fn load_prior(args: &RunArgs, method: Li2Method, state: &CensusState) -> Result<Prior, Failure> {
    let hint = "resuming needs the outputs written alongside the checkpoint";
    let out = &args.out_dir;
    let records_path = out.join(file_name("records", method, args.li2_method));
    if !records_path.exists() {
        return Err(Error::MissingInput {
            path: records_path,
            hint: hint.into(),
        }
        .into());
    }
    let records: Vec<SignChangeRecord> = read_records(&records_path)?
        .into_iter()
        .filter(|r| r.q <= state.prime_cursor)
        .collect();
    if records.len() as u64 != state.change_count {
        return Err(Failure::Usage(format!(
            "{} holds {} sign changes up to {}, the checkpoint expects {}",
            records_path.display(),
            records.len(),
            state.prime_cursor,
            state.change_count
        )));
    }
    let env_path = out.join(file_name("envelopes", method, args.li2_method));
    let mut envelope = Vec::new();
    for (i, row) in read_csv(&env_path, ENVELOPE_HEADER, hint)?.iter().enumerate() {
        let s = EnvelopeSample {
            x: parse_field(&env_path, i, row, 0)?,
            d2: parse_field(&env_path, i, row, 1)?,
            delta2: parse_field(&env_path, i, row, 2)?,
            d: parse_field(&env_path, i, row, 3)?,
            delta: parse_field(&env_path, i, row, 4)?,
        };
        if s.x <= state.prime_cursor as f64 {
            envelope.push(s);
        }
    }
    let (delta2_events, delta_events) = read_events(&out.join(file_name("events", method, args.li2_method)), hint)?;
    let below = |v: Vec<(f64, f64)>| v.into_iter().filter(|p| p.0 <= state.prime_cursor as f64).collect();
    Ok(Prior {
        records,
        envelope,
        delta2_events: below(delta2_events),
        delta_events: below(delta_events),
    })
}

#[allow(clippy::type_complexity)]
fn read_events(path: &Path, hint: &str) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>), Failure> {
    let mut d2 = Vec::new();
    let mut d = Vec::new();
    for (i, row) in read_csv(path, EVENTS_HEADER, hint)?.iter().enumerate() {
        let p = (parse_field(path, i, row, 1)?, parse_field(path, i, row, 2)?);
        match row[0].as_str() {
            "delta2" => d2.push(p),
            "delta" => d.push(p),
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    msg: format!("unknown event kind `{other}`"),
                }
                .into())
            }
        }
    }
    Ok((d2, d))
}

fn run_method(args: &RunArgs, method: Li2Method) -> Result<MethodRun, Failure> {
    let checkpoint_path = checkpoint_file(args, method);
    let resumable = args.resume && checkpoint_path.as_ref().is_some_and(|p| p.exists());
    let (state, prior) = if resumable {
        let path = checkpoint_path.as_ref().expect("checked above");
        let state = checkpoint_load(path)?;
        if state.method != method || state.convention != args.convention() {
            return Err(Failure::Usage(format!(
                "checkpoint {} was written with different --li2-method or --offset-corrected",
                path.display()
            )));
        }
        if state.boundary > args.limit {
            return Err(Failure::Usage(format!(
                "checkpoint {} is already past --limit ({} > {})",
                path.display(),
                state.boundary,
                args.limit
            )));
        }
        let prior = load_prior(args, method, &state)?;
        (state, Some(prior))
    } else {
        (CensusState::new(method, args.convention()), None)
    };

    let config = CensusConfig {
        method,
        convention: args.convention(),
        segment_length: args.segment_length,
        workers: args.workers,
        extra_checkpoints: args.checkpoint_at.clone(),
        envelope_grid: powers_of_two(args.limit).into_iter().map(|t| t as f64).collect(),
        event_ratio: EVENT_RATIO,
        checkpoint_path,
        checkpoint_every: PROGRESS_EVERY,
        progress_every: PROGRESS_EVERY,
    };
    let prior = prior.unwrap_or(Prior {
        records: Vec::new(),
        envelope: Vec::new(),
        delta2_events: Vec::new(),
        delta_events: Vec::new(),
    });
    let persist = config.checkpoint_path.is_some();
    let started = Instant::now();
    let mut partial_error = None;
    let mut progress = |p: &Progress<'_>| {
        let s = p.state;
        eprintln!(
            "progress method={} boundary={} twins={} primes={} sign_changes={} d2={} elapsed_s={:.1}",
            method.name(),
            s.boundary,
            s.twin_count,
            s.prime_count,
            prior.records.len() + p.records.len(),
            fmt_real(s.d2()),
            started.elapsed().as_secs_f64()
        );
        if persist && partial_error.is_none() {
            let run = merge(&prior, method, s.clone(), p.records, p.envelope, p.delta2_events, p.delta_events);
            partial_error = write_method_outputs(args, &run).err();
        }
    };
    let result = resume_census(state, args.limit, &config, &mut progress)?;
    if let Some(e) = partial_error {
        return Err(e);
    }
    Ok(merge(
        &prior,
        method,
        result.state,
        &result.records,
        &result.envelope,
        &result.delta2_events,
        &result.delta_events,
    ))
}

fn merge(
    prior: &Prior,
    method: Li2Method,
    state: CensusState,
    records: &[SignChangeRecord],
    envelope: &[EnvelopeSample],
    delta2_events: &EnvelopeEvents,
    delta_events: &EnvelopeEvents,
) -> MethodRun {
    let join = |a: &[(f64, f64)], b: &EnvelopeEvents| rethin(a.iter().chain(b.points()).copied());
    MethodRun {
        method,
        records: prior.records.iter().chain(records).copied().collect(),
        state,
        envelope: prior.envelope.iter().chain(envelope).copied().collect(),
        delta2_events: join(&prior.delta2_events, delta2_events),
        delta_events: join(&prior.delta_events, delta_events),
    }
}

/// Records, envelopes and events of one method.
fn write_method_outputs(args: &RunArgs, run: &MethodRun) -> Outcome {
    let out = &args.out_dir;
    let name = |stem| out.join(file_name(stem, run.method, args.li2_method));
    write_atomic(&name("records"), records_csv(&run.records).as_bytes())?;
    write_atomic(&name("envelopes"), envelope_csv(&run.envelope).as_bytes())?;
    write_atomic(&name("events"), events_csv(run).as_bytes())?;
    Ok(())
}

fn records_csv(records: &[SignChangeRecord]) -> String {
    csv_document(RECORDS_HEADER, records.iter().map(SignChangeRecord::csv_row))
}

fn envelope_csv(samples: &[EnvelopeSample]) -> String {
    csv_document(ENVELOPE_HEADER, samples.iter().map(EnvelopeSample::csv_row))
}

fn events_csv(run: &MethodRun) -> String {
    let rows = run
        .delta2_events
        .iter()
        .map(|p| ("delta2", p))
        .chain(run.delta_events.iter().map(|p| ("delta", p)))
        .map(|(k, (x, v))| format!("{k},{},{}", fmt_real(*x), fmt_real(*v)));
    csv_document(EVENTS_HEADER, rows)
}

fn fit_json(fit: Result<PowerFit<f64>, Error>) -> Value {
    match fit {
        Ok(f) => json!({
            "coeff": f.coeff,
            "exponent": f.exponent,
            "rms_residual": f.rms_residual,
            "n_points": f.n_points,
        }),
        Err(_) => Value::Null,
    }
}

fn fit_line(name: &str, fit: &Result<PowerFit<f64>, Error>) {
    match fit {
        Ok(f) => println!(
            "fit={name} coeff={} exponent={} rms_residual={} n_points={}",
            f.coeff, f.exponent, f.rms_residual, f.n_points
        ),
        Err(e) => println!("fit={name} status=unavailable reason=\"{e}\""),
    }
}

/// `(x, envelope)` from grid samples and increase events, ascending.
fn envelope_points(samples: &[(f64, f64)], events: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = samples.iter().chain(events).copied().collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    pts
}

fn envelope_fits(
    args: &RunArgs,
    envelope: &[EnvelopeSample],
    delta2_events: &[(f64, f64)],
    delta_events: &[(f64, f64)],
) -> (Result<PowerFit<f64>, Error>, Result<PowerFit<f64>, Error>) {
    let d2: Vec<(f64, f64)> = envelope.iter().map(|s| (s.x, s.delta2)).collect();
    let d: Vec<(f64, f64)> = envelope.iter().map(|s| (s.x, s.delta)).collect();
    let fit = |pts: Vec<(f64, f64)>| windowed_fit(&pts, args.fit_min, args.fit_max(), FIT_POINTS);
    (
        fit(envelope_points(&d2, delta2_events)),
        fit(envelope_points(&d, delta_events)),
    )
}

fn nu2_fit(table: &[(u64, u64)]) -> Result<PowerFit<f64>, Error> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|&&(t, n)| t >= TABLE_START && n > 0)
        .map(|&(t, n)| (t as f64, n as f64))
        .collect();
    power_fit(&pts)
}

fn config_echo(args: &RunArgs) -> Value {
    json!({
        "limit": args.limit,
        "segment_length": args.segment_length,
        "li2_method": args.li2_method,
        "offset_corrected": args.offset_corrected,
        "grid_base": args.grid_base,
        "grid_ratio": args.grid_ratio,
        "detemple_threshold": args.detemple_threshold,
        "checkpoint_at": args.checkpoint_at,
        "fit_min": args.fit_min,
        "fit_max": args.fit_max(),
    })
}

fn counts_json(run: &MethodRun) -> Value {
    json!({
        "twins": run.state.twin_count,
        "primes": run.state.prime_count,
        "sign_changes": run.records.len(),
        "float_zero_hits": run.state.zero_hits,
        "delta2_max": run.state.delta2_max,
        "delta_max": run.state.delta_max,
    })
}

pub fn census(args: &RunArgs) -> Outcome {
    args.validate().map_err(Failure::Usage)?;
    fs::create_dir_all(&args.out_dir)?;
    let started = Instant::now();
    let runs = args
        .li2_method
        .methods()
        .into_iter()
        .map(|m| run_method(args, m))
        .collect::<Result<Vec<_>, _>>()?;

    let out = &args.out_dir;
    let ts = table_points(args);
    let primary = &runs[0];
    for run in &runs {
        write_method_outputs(args, run)?;
    }
    if args.li2_method == MethodChoice::Both {
        write_atomic(&out.join("records.csv"), records_csv(&primary.records).as_bytes())?;
        write_atomic(&out.join("envelopes.csv"), envelope_csv(&primary.envelope).as_bytes())?;
        write_atomic(&out.join("events.csv"), events_csv(primary).as_bytes())?;
    }
    let nu2 = nu2_table(&primary.records, &ts);
    write_atomic(
        &out.join("nu2.csv"),
        csv_document(NU2_HEADER, nu2.iter().map(|(t, n)| format!("{t},{n}"))).as_bytes(),
    )?;

    let mut methods = serde_json::Map::new();
    for run in &runs {
        let (f2, f) = envelope_fits(args, &run.envelope, &run.delta2_events, &run.delta_events);
        let table = nu2_table(&run.records, &ts);
        methods.insert(
            run.method.name().into(),
            json!({
                "counts": counts_json(run),
                "nu2": table.iter().map(|&(t, n)| json!([t, n])).collect::<Vec<_>>(),
                "fits": {
                    "delta2": fit_json(f2),
                    "delta": fit_json(f),
                    "nu2": fit_json(nu2_fit(&table)),
                },
            }),
        );
    }
    let mut section = json!({
        "config": config_echo(args),
        "primary_method": primary.method.name(),
        "methods": methods,
    });
    if let [a, b] = &runs[..] {
        let diff = MethodDiff::between(&a.records, &b.records);
        let rows = diff
            .positions()
            .into_iter()
            .map(|(p, q, side)| format!("{p},{q},{}", runs[usize::from(side) - 1].method.name()));
        write_atomic(&out.join("method_diff.csv"), csv_document(DIFF_HEADER, rows).as_bytes())?;
        println!(
            "method_diff count={} first={}",
            diff.len(),
            diff.first().map_or("none".into(), |(p, q)| format!("{p},{q}"))
        );
        section["method_diff"] = json!({
            "count": diff.len(),
            "first": diff.first().map(|(p, q)| json!([p, q])),
        });
    }
    for run in &runs {
        println!(
            "census method={} limit={} twins={} sign_changes={}",
            run.method.name(),
            args.limit,
            run.state.twin_count,
            run.records.len()
        );
    }
    section["wall_time_s"] = json!(started.elapsed().as_secs_f64());
    summary::update(out, "census", section)?;
    Ok(())
}

fn census_limit(out: &Path) -> Result<u64, Failure> {
    let section = summary::section(out, "census", "run `twinskew census` with the same --out-dir first")?;
    section["config"]["limit"].as_u64().ok_or_else(|| {
        Failure::Core(Error::Parse {
            path: out.join(summary::FILE),
            line: 0,
            msg: "census.config.limit is missing".into(),
        })
    })
}

fn require(path: PathBuf, hint: &str) -> Result<PathBuf, Failure> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingInput {
            path,
            hint: hint.into(),
        }
        .into())
    }
}

pub fn density(args: &RunArgs) -> Outcome {
    args.validate().map_err(Failure::Usage)?;
    let out = &args.out_dir;
    let hint = "run `twinskew census` with the same --out-dir first";
    require(out.join("records.csv"), hint)?;
    let have = census_limit(out)?;
    if have < args.limit {
        return Err(Failure::Usage(format!(
            "census in {} only reaches {have}, density asked for {}",
            out.display(),
            args.limit
        )));
    }
    let started = Instant::now();
    let config = DensityConfig {
        method: args.li2_method.primary(),
        convention: args.convention(),
        grid_base: args.grid_base,
        grid_ratio: args.grid_ratio,
        detemple_threshold: args.detemple_threshold,
        segment_length: args.segment_length,
        workers: args.workers,
    };
    let samples = densities(args.limit, &config)?;
    write_atomic(
        &out.join("densities.csv"),
        csv_document(DENSITIES_HEADER, samples.iter().map(|s| s.csv_row())).as_bytes(),
    )?;
    println!("density limit={} rows={}", args.limit, samples.len());
    let last = samples.last().map(|s| json!({"x": s.x, "delta_plus": s.delta_plus, "delta_minus": s.delta_minus}));
    summary::update(
        out,
        "density",
        json!({
            "config": config_echo(args),
            "method": config.method.name(),
            "rows": samples.len(),
            "last": last,
            "wall_time_s": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(())
}

fn dat(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("# {header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

pub fn report(args: &RunArgs) -> Outcome {
    args.validate().map_err(Failure::Usage)?;
    let out = &args.out_dir;
    let census_hint = "run `twinskew census` with the same --out-dir first";
    let records_path = require(out.join("records.csv"), census_hint)?;
    let nu2_path = require(out.join("nu2.csv"), census_hint)?;
    let env_path = require(out.join("envelopes.csv"), census_hint)?;
    let events_path = require(out.join("events.csv"), census_hint)?;
    let dens_path = require(out.join("densities.csv"), "run `twinskew density` with the same --out-dir first")?;

    let records = read_records(&records_path)?;
    if records.is_empty() {
        return Err(Failure::Usage(format!(
            "{} holds no sign changes; nothing to report",
            records_path.display()
        )));
    }
    let mut table = Vec::new();
    for (i, row) in read_csv(&nu2_path, NU2_HEADER, census_hint)?.iter().enumerate() {
        table.push((parse_field::<u64>(&nu2_path, i, row, 0)?, parse_field::<u64>(&nu2_path, i, row, 1)?));
    }
    let mut envelope = Vec::new();
    for (i, row) in read_csv(&env_path, ENVELOPE_HEADER, census_hint)?.iter().enumerate() {
        envelope.push(EnvelopeSample {
            x: parse_field(&env_path, i, row, 0)?,
            d2: parse_field(&env_path, i, row, 1)?,
            delta2: parse_field(&env_path, i, row, 2)?,
            d: parse_field(&env_path, i, row, 3)?,
            delta: parse_field(&env_path, i, row, 4)?,
        });
    }
    let (delta2_events, delta_events) = read_events(&events_path, census_hint)?;
    let dens_rows = read_csv(&dens_path, DENSITIES_HEADER, "")?;
    let limit = table.last().map_or(args.limit, |r| r.0).max(records.last().map_or(0, |r| r.q));

    let report = conjecture_compare(&table)?;
    let staircase = staircase_crossings(&records, TABLE_START as f64, limit)?;
    let (f2, f) = envelope_fits(args, &envelope, &delta2_events, &delta_events);
    let fnu = nu2_fit(&table);

    let fit_at = |fit: &Result<PowerFit<f64>, Error>, x: f64| match fit {
        Ok(p) => fmt_real(p.eval(x)),
        Err(_) => "nan".into(),
    };
    let fig1 = dat(
        "T nu2 sqrt(T)/log(T)",
        report.rows.iter().map(|r| format!("{} {} {}", r.t, r.nu2, fmt_real(r.reference))),
    );
    let mut fig2 = dat(
        "x d Delta fit",
        envelope
            .iter()
            .map(|s| format!("{} {} {} {}", fmt_real(s.x), fmt_real(s.d), fmt_real(s.delta), fit_at(&f, s.x))),
    );
    fig2.push_str("\n\n");
    fig2.push_str(&dat(
        "x Delta fit (envelope increases)",
        delta_events
            .iter()
            .map(|&(x, v)| format!("{} {} {}", fmt_real(x), fmt_real(v), fit_at(&f, x))),
    ));
    let mut fig3 = dat(
        "x abs_d2 Delta2 fit",
        envelope.iter().map(|s| {
            format!(
                "{} {} {} {}",
                fmt_real(s.x),
                fmt_real(s.d2.abs().max(ABS_D2_FLOOR)),
                fmt_real(s.delta2),
                fit_at(&f2, s.x)
            )
        }),
    );
    fig3.push_str("\n\n");
    fig3.push_str(&dat(
        "x Delta2 fit (envelope increases)",
        delta2_events
            .iter()
            .map(|&(x, v)| format!("{} {} {}", fmt_real(x), fmt_real(v), fit_at(&f2, x))),
    ));
    let fig4 = dat("x delta_plus delta_minus", dens_rows.iter().map(|r| r.join(" ")));

    write_atomic(
        &out.join("report.csv"),
        csv_document(REPORT_HEADER, report.rows.iter().map(|r| r.csv_row())).as_bytes(),
    )?;
    write_atomic(&out.join("fig1.dat"), fig1.as_bytes())?;
    write_atomic(&out.join("fig2.dat"), fig2.as_bytes())?;
    write_atomic(&out.join("fig3.dat"), fig3.as_bytes())?;
    write_atomic(&out.join("fig4.dat"), fig4.as_bytes())?;

    println!("crossings table_rows={} staircase={}", report.crossings, staircase);
    fit_line("nu2", &fnu);
    fit_line("delta", &f);
    fit_line("delta2", &f2);
    summary::update(
        out,
        "report",
        json!({
            "config": config_echo(args),
            "table_rows": report.rows.len(),
            "crossings_between_rows": report.crossings,
            "crossings_staircase": staircase,
            "fits": {
                "nu2": fit_json(fnu),
                "delta": fit_json(f),
                "delta2": fit_json(f2),
            },
        }),
    )?;
    Ok(())
}
