use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twinskew::census::Li2Method;
use twinskew::li::Li2Convention;

#[derive(Debug, Parser)]
#[command(name = "twinskew", version, about = "Sign changes of pi2(x) - C2 Li2(x) and related statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sieve to the limit, record every sign change of d2 and the envelopes.
    Census(RunArgs),
    /// Running logarithmic densities of {d2 > 0} and {d2 < 0}; needs a census.
    Density(RunArgs),
    /// Conjecture table, power fits and plot data from earlier outputs.
    Report(RunArgs),
    /// Quick numerical self-checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Quadrature,
    Series,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Li2Method> {
        match self {
            MethodChoice::Quadrature => vec![Li2Method::Quadrature],
            MethodChoice::Series => vec![Li2Method::Series],
            MethodChoice::Both => vec![Li2Method::Quadrature, Li2Method::Series],
        }
    }

    /// The method whose results feed `records.csv` and the later commands.
    pub fn primary(self) -> Li2Method {
        self.methods()[0]
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Upper end of the census: `2^k`, an integer, or scientific notation.
    #[arg(long, env = "TWINSKEW_LIMIT", value_parser = parse_count)]
    pub limit: u64,

    #[arg(long, env = "TWINSKEW_SEGMENT_LENGTH", default_value = "2^20", value_parser = parse_count)]
    pub segment_length: u64,

    #[arg(long, env = "TWINSKEW_LI2_METHOD", value_enum, default_value_t = MethodChoice::Quadrature)]
    pub li2_method: MethodChoice,

    /// Add 2/log 2 so that Li2 vanishes at 2.
    #[arg(long, env = "TWINSKEW_OFFSET_CORRECTED", default_value_t = true, action = clap::ArgAction::Set)]
    pub offset_corrected: bool,

    #[arg(long, env = "TWINSKEW_CHECKPOINT")]
    pub checkpoint: Option<PathBuf>,

    /// Continue from the checkpoint file and the outputs already in out-dir.
    #[arg(long, env = "TWINSKEW_RESUME", requires = "checkpoint")]
    pub resume: bool,

    #[arg(long, env = "TWINSKEW_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,

    #[arg(long, env = "TWINSKEW_GRID_BASE", default_value_t = 100.0)]
    pub grid_base: f64,

    #[arg(long, env = "TWINSKEW_GRID_RATIO", default_value_t = 1.001)]
    pub grid_ratio: f64,

    #[arg(long, env = "TWINSKEW_DETEMPLE_THRESHOLD", default_value = "2^31", value_parser = parse_count)]
    pub detemple_threshold: u64,

    #[arg(long, env = "TWINSKEW_WORKERS", default_value_t = 1)]
    pub workers: usize,

    /// Extra `T` for the nu2 table besides powers of two (repeatable).
    #[arg(long = "checkpoint-at", value_parser = parse_count)]
    pub checkpoint_at: Vec<u64>,

    /// Lower end of the envelope fit window.
    #[arg(long, env = "TWINSKEW_FIT_MIN", default_value_t = 1e6)]
    pub fit_min: f64,

    /// Upper end of the envelope fit window; defaults to the limit.
    #[arg(long, env = "TWINSKEW_FIT_MAX")]
    pub fit_max: Option<f64>,
}

impl RunArgs {
    pub fn convention(&self) -> Li2Convention {
        if self.offset_corrected {
            Li2Convention::OffsetCorrected
        } else {
            Li2Convention::Uncorrected
        }
    }

    pub fn fit_max(&self) -> f64 {
        self.fit_max.unwrap_or(self.limit as f64)
    }

    /// Checks the invariants clap cannot express.
    pub fn validate(&self) -> Result<(), String> {
        if self.limit < 2 {
            return Err(format!("--limit must be at least 2, got {}", self.limit));
        }
        if self.segment_length < 64 {
            return Err(format!("--segment-length must be at least 64, got {}", self.segment_length));
        }
        if !(self.grid_ratio > 1.0) {
            return Err(format!("--grid-ratio must exceed 1, got {}", self.grid_ratio));
        }
        if !(self.grid_base > 1.0) {
            return Err(format!("--grid-base must exceed 1, got {}", self.grid_base));
        }
        if self.workers < 1 {
            return Err("--workers must be at least 1".into());
        }
        if self.detemple_threshold < 1 {
            return Err("--detemple-threshold must be at least 1".into());
        }
        if !(self.fit_min > 0.0) {
            return Err(format!("--fit-min must be positive, got {}", self.fit_min));
        }
        if let Some(max) = self.fit_max {
            if !(max > self.fit_min) {
                return Err(format!("empty fit window [{}, {max}]", self.fit_min));
            }
        }
        Ok(())
    }
}

/// Parses `2^k`, a plain integer, or scientific notation such as `1e9` or
/// `2.5e6` (which must denote an integer).
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Some((base, exp)) = s.split_once('^') {
        let base: u64 = base.parse().map_err(|_| format!("bad base in `{s}`"))?;
        let exp: u32 = exp.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
        return base.checked_pow(exp).ok_or_else(|| format!("`{s}` overflows 64 bits"));
    }
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if !(v >= 0.0) || v.fract() != 0.0 || v >= 2f64.powi(64) {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(v as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("2^30"), Ok(1 << 30));
        assert_eq!(parse_count("1000000"), Ok(1_000_000));
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("2.5e3"), Ok(2500));
        assert_eq!(parse_count("1_024"), Ok(1024));
        assert!(parse_count("2^64").is_err());
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("ten").is_err());
    }
}
