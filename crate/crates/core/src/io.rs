//! Shared text-output conventions: LF line endings and reals printed with 17
//! significant digits so every value round-trips exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a real with 17 significant digits in scientific notation.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `content` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(content)?;
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Builds a CSV document: a header line, then one line per row.
pub fn csv_document<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<str>,
{
    let mut out = String::with_capacity(header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r.as_ref());
        out.push('\n');
    }
    out
}

/// Reads a CSV written by [`csv_document`], checking the header. A missing
/// file is reported as a missing dependency with `hint`.
pub fn read_csv(path: &Path, header: &str, hint: &str) -> Result<Vec<Vec<String>>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingInput {
                path: path.to_path_buf(),
                hint: hint.to_string(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header `{header}`"),
        });
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                msg: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}

/// Parses field `col` of a row from [`read_csv`].
pub fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, fields: &[String], col: usize) -> Result<T> {
    fields[col].parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: row + 2,
        msg: format!("cannot parse `{}`", fields[col]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -0.3, 1.0 / 3.0, 1e300, -2.5e-310, 0.0] {
            let s = fmt_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_real(0.7), "6.9999999999999996e-1");
    }

    #[test]
    fn csv_has_header_and_lf() {
        let doc = csv_document("a,b", ["1,2", "3,4"]);
        assert_eq!(doc, "a,b\n1,2\n3,4\n");
        assert_eq!(csv_document("a", Vec::<String>::new()), "a\n");
    }

    #[test]
    fn read_back_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        assert!(matches!(read_csv(&p, "a,b", "run it"), Err(Error::MissingInput { .. })));
        write_atomic(&p, csv_document("a,b", ["1,2.5"]).as_bytes()).unwrap();
        let rows = read_csv(&p, "a,b", "").unwrap();
        assert_eq!(parse_field::<f64>(&p, 0, &rows[0], 1).unwrap(), 2.5);
        assert!(matches!(read_csv(&p, "a,c", ""), Err(Error::Parse { line: 1, .. })));
        write_atomic(&p, b"a,b\n1\n").unwrap();
        assert!(matches!(read_csv(&p, "a,b", ""), Err(Error::Parse { line: 2, .. })));
    }
}
