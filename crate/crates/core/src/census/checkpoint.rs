//! Versioned text checkpoints of [`CensusState`].
//!
//! Layout: the magic line `TWSK1`, `key=value` lines with every real stored
//! as the 16 hex digits of its IEEE-754 bit pattern, and a final
//! `crc32=xxxxxxxx` line covering all preceding bytes.

use std::fs;
use std::path::Path;

use super::{CensusState, Li2Method, Sign};
use crate::error::{CheckpointError, Error, Result};
use crate::io::write_atomic;
use crate::kahan::KahanSum;
use crate::li::Li2Convention;

pub const CHECKPOINT_MAGIC: &str = "TWSK1";
pub const CHECKPOINT_VERSION: u32 = 1;

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn encode(s: &CensusState) -> String {
    let fields: [(&str, String); 17] = [
        ("format_version", CHECKPOINT_VERSION.to_string()),
        ("method", s.method.name().to_string()),
        (
            "convention",
            match s.convention {
                Li2Convention::OffsetCorrected => "corrected",
                Li2Convention::Uncorrected => "uncorrected",
            }
            .to_string(),
        ),
        ("boundary", s.boundary.to_string()),
        ("x_cursor", s.x_cursor.to_string()),
        ("twin_count", s.twin_count.to_string()),
        ("li2_sum", hex(s.li2.value())),
        ("li2_comp", hex(s.li2.compensation())),
        ("sign", s.sign.as_i8().to_string()),
        ("change_count", s.change_count.to_string()),
        ("delta2_max", hex(s.delta2_max)),
        ("prime_cursor", s.prime_cursor.to_string()),
        ("prime_count", s.prime_count.to_string()),
        ("li_sum", hex(s.li.value())),
        ("li_comp", hex(s.li.compensation())),
        ("delta_max", hex(s.delta_max)),
        ("zero_hits", s.zero_hits.to_string()),
    ];
    let mut out = format!("{CHECKPOINT_MAGIC}\n");
    for (k, v) in fields {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    }
    out
}

/// Writes `state` to `path` atomically.
pub fn checkpoint_save(state: &CensusState, path: &Path) -> Result<()> {
    let mut doc = encode(state);
    let crc = crc32fast::hash(doc.as_bytes());
    doc.push_str(&format!("crc32={crc:08x}\n"));
    write_atomic(path, doc.as_bytes())
}

pub fn checkpoint_load(path: &Path) -> Result<CensusState> {
    let bytes = fs::read(path)?;
    decode(&bytes).map_err(|kind| Error::Checkpoint {
        path: path.to_path_buf(),
        kind,
    })
}

fn decode(bytes: &[u8]) -> std::result::Result<CensusState, CheckpointError> {
    use CheckpointError::*;
    let magic_end = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
    let magic = std::str::from_utf8(&bytes[..magic_end]).map_err(|_| BadMagic)?;
    if magic != CHECKPOINT_MAGIC {
        if let Some(v) = magic.strip_prefix("TWSK").and_then(|v| v.parse::<u32>().ok()) {
            return Err(Version {
                found: v,
                expected: CHECKPOINT_VERSION,
            });
        }
        return Err(BadMagic);
    }

    // Split off the trailer line.
    let body_end = match bytes.strip_suffix(b"\n") {
        Some(b) => b.iter().rposition(|&c| c == b'\n').map(|i| i + 1),
        None => None,
    };
    let (payload, trailer) = match body_end {
        Some(i) => (&bytes[..i], &bytes[i..]),
        None => (bytes, &b""[..]),
    };
    let computed = crc32fast::hash(payload);
    let stored = std::str::from_utf8(trailer)
        .ok()
        .and_then(|t| t.trim_end().strip_prefix("crc32="))
        .and_then(|h| u32::from_str_radix(h, 16).ok());
    if stored != Some(computed) {
        return Err(Checksum { stored, computed });
    }

    let text = std::str::from_utf8(payload).map_err(|_| Malformed("not UTF-8".into()))?;
    let mut map = std::collections::HashMap::new();
    for line in text.lines().skip(1) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Malformed(format!("line without '=': {line}")))?;
        map.insert(k, v);
    }
    let get = |k: &str| map.get(k).copied().ok_or_else(|| Malformed(format!("missing field {k}")));
    let int = |k: &str| -> std::result::Result<u64, CheckpointError> {
        get(k)?.parse().map_err(|_| Malformed(format!("bad integer in {k}")))
    };
    let real = |k: &str| -> std::result::Result<f64, CheckpointError> {
        let h = get(k)?;
        if h.len() != 16 {
            return Err(Malformed(format!("bad bit pattern in {k}")));
        }
        u64::from_str_radix(h, 16)
            .map(f64::from_bits)
            .map_err(|_| Malformed(format!("bad bit pattern in {k}")))
    };

    let version: u32 = get("format_version")?
        .parse()
        .map_err(|_| Malformed("bad format_version".into()))?;
    if version != CHECKPOINT_VERSION {
        return Err(Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let method = match get("method")? {
        "quadrature" => Li2Method::Quadrature,
        "series" => Li2Method::Series,
        m => return Err(Malformed(format!("unknown method {m}"))),
    };
    let convention = match get("convention")? {
        "corrected" => Li2Convention::OffsetCorrected,
        "uncorrected" => Li2Convention::Uncorrected,
        c => return Err(Malformed(format!("unknown convention {c}"))),
    };
    let sign = match get("sign")? {
        "1" => Sign::Positive,
        "-1" => Sign::Negative,
        s => return Err(Malformed(format!("bad sign {s}"))),
    };
    Ok(CensusState {
        method,
        convention,
        boundary: int("boundary")?,
        x_cursor: int("x_cursor")?,
        twin_count: int("twin_count")?,
        li2: KahanSum::from_parts(real("li2_sum")?, real("li2_comp")?),
        sign,
        change_count: int("change_count")?,
        delta2_max: real("delta2_max")?,
        prime_cursor: int("prime_cursor")?,
        prime_count: int("prime_count")?,
        li: KahanSum::from_parts(real("li_sum")?, real("li_comp")?),
        delta_max: real("delta_max")?,
        zero_hits: int("zero_hits")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_state() -> CensusState {
        let mut s = CensusState::new(Li2Method::Series, Li2Convention::Uncorrected);
        s.boundary = 10_000_000;
        s.x_cursor = 9_999_973;
        s.twin_count = 58_980;
        s.li2 = KahanSum::from_parts(58_980.123_456_789, -1.234e-13);
        s.delta2_max = 70.5;
        s.li = KahanSum::from_parts(664_917.359_9, 3.0e-12);
        s.prime_count = 664_579;
        s.prime_cursor = 9_999_991;
        s.change_count = 29;
        s.zero_hits = 1;
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.ckpt");
        for s in [sample_state(), CensusState::new(Li2Method::Quadrature, Li2Convention::OffsetCorrected)] {
            checkpoint_save(&s, &path).unwrap();
            let back = checkpoint_load(&path).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.li2.compensation().to_bits(), s.li2.compensation().to_bits());
        }
    }

    #[test]
    fn truncation_and_corruption_fail_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.ckpt");
        checkpoint_save(&sample_state(), &path).unwrap();
        let full = fs::read(&path).unwrap();

        for cut in [full.len() - 1, full.len() - 12, full.len() / 2, 7] {
            fs::write(&path, &full[..cut]).unwrap();
            let err = checkpoint_load(&path).unwrap_err();
            assert!(
                matches!(err, Error::Checkpoint { kind: CheckpointError::Checksum { .. }, .. }),
                "cut {cut}: {err}"
            );
        }

        let mut flipped = full.clone();
        let i = full.iter().position(|&b| b == b'5').unwrap();
        flipped[i] = b'6';
        fs::write(&path, &flipped).unwrap();
        assert!(matches!(
            checkpoint_load(&path),
            Err(Error::Checkpoint { kind: CheckpointError::Checksum { .. }, .. })
        ));
    }

    #[test]
    fn version_and_magic_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.ckpt");
        fs::write(&path, b"TWSK2\nformat_version=2\n").unwrap();
        assert!(matches!(
            checkpoint_load(&path),
            Err(Error::Checkpoint { kind: CheckpointError::Version { found: 2, .. }, .. })
        ));

        let mut doc = encode(&sample_state()).replace("format_version=1", "format_version=7");
        let crc = crc32fast::hash(doc.as_bytes());
        doc.push_str(&format!("crc32={crc:08x}\n"));
        fs::write(&path, doc).unwrap();
        assert!(matches!(
            checkpoint_load(&path),
            Err(Error::Checkpoint { kind: CheckpointError::Version { found: 7, .. }, .. })
        ));

        fs::write(&path, b"hello\n").unwrap();
        assert!(matches!(
            checkpoint_load(&path),
            Err(Error::Checkpoint { kind: CheckpointError::BadMagic, .. })
        ));
    }
}
