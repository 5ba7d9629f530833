//! `summary.json`: one object per command, merged into a single file.
//!
//! ```text
//! {
//!   "schema": 1,
//!   "version": "<crate version>",
//!   "census":  { "config", "primary_method", "methods": { <name>: { "counts", "nu2", "fits" } },
//!                "method_diff"?, "wall_time_s" },
//!   "density": { "config", "method", "rows", "last", "wall_time_s" },
//!   "report":  { "config", "table_rows", "crossings_between_rows", "crossings_staircase", "fits" }
//! }
//! ```
//! A fit is `{ "coeff", "exponent", "rms_residual", "n_points" }` or `null`
//! when too few points fall in the window.

use std::path::Path;

use serde_json::{json, Value};

use twinskew::io::write_atomic;
use twinskew::Error;

use crate::commands::Failure;

pub const FILE: &str = "summary.json";
pub const SCHEMA: u64 = 1;

fn load(out: &Path) -> Result<Option<Value>, Failure> {
    let path = out.join(FILE);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| {
            Failure::Core(Error::Parse {
                path,
                line: e.line(),
                msg: e.to_string(),
            })
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Replaces the `key` section, keeping the others.
pub fn update(out: &Path, key: &str, section: Value) -> Result<(), Failure> {
    let mut doc = match load(out)? {
        Some(v @ Value::Object(_)) if v["schema"] == json!(SCHEMA) => v,
        _ => json!({}),
    };
    doc["schema"] = json!(SCHEMA);
    doc["version"] = json!(env!("CARGO_PKG_VERSION"));
    doc[key] = section;
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    text.push('\n');
    write_atomic(&out.join(FILE), text.as_bytes())?;
    Ok(())
}

/// The `key` section, or a missing-dependency error naming the file.
pub fn section(out: &Path, key: &str, hint: &str) -> Result<Value, Failure> {
    let missing = || {
        Failure::Core(Error::MissingInput {
            path: out.join(FILE),
            hint: hint.to_string(),
        })
    };
    let doc = load(out)?.ok_or_else(missing)?;
    match doc.get(key) {
        Some(v) if !v.is_null() => Ok(v.clone()),
        _ => Err(missing()),
    }
}
