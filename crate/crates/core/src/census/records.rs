use std::fs;
use std::path::Path;

use super::{Direction, SignChangeRecord};
use crate::error::{Error, Result};
use crate::io::{csv_document, fmt_real, write_atomic};

pub const RECORDS_HEADER: &str = "ordinal,p,q,direction,d2_before,d2_after";

impl SignChangeRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.ordinal,
            self.p,
            self.q,
            self.direction.as_str(),
            fmt_real(self.d2_before),
            fmt_real(self.d2_after)
        )
    }
}

pub fn write_records(path: &Path, records: &[SignChangeRecord]) -> Result<()> {
    let doc = csv_document(RECORDS_HEADER, records.iter().map(|r| r.csv_row()));
    write_atomic(path, doc.as_bytes())
}

pub fn read_records(path: &Path) -> Result<Vec<SignChangeRecord>> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput {
            path: path.to_path_buf(),
            hint: "run `census` first to produce the sign-change records".into(),
        },
        _ => Error::Io(e),
    })?;
    let parse_err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RECORDS_HEADER => {}
        _ => return Err(parse_err(1, "missing records header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(parse_err(i + 1, "expected 6 fields"));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| parse_err(i + 1, "bad integer"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| parse_err(i + 1, "bad real"));
        out.push(SignChangeRecord {
            ordinal: int(f[0])?,
            p: int(f[1])?,
            q: int(f[2])?,
            direction: Direction::parse(f[3]).ok_or_else(|| parse_err(i + 1, "bad direction"))?,
            d2_before: real(f[4])?,
            d2_after: real(f[5])?,
        });
    }
    Ok(out)
}

/// Number of sign changes observed below `t`, i.e. at pairs with `q < t`.
pub fn nu2_at(records: &[SignChangeRecord], t: u64) -> u64 {
    records.partition_point(|r| r.q < t) as u64
}

/// `(T, nu2(T))` for each `T` in `ts`.
pub fn nu2_table(records: &[SignChangeRecord], ts: &[u64]) -> Vec<(u64, u64)> {
    ts.iter().map(|&t| (t, nu2_at(records, t))).collect()
}
