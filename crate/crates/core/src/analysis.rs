//! Power-law fits in log-log space and the comparison of the sign-change
//! count with `sqrt(T)/log T`.

use crate::census::SignChangeRecord;
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::kahan::KahanSum;
use crate::num::Real;

pub const REPORT_HEADER: &str = "T,nu2,ref,ratio";

/// `y ~ coeff * x^exponent`, fitted by ordinary least squares on
/// `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit<T: Real> {
    pub coeff: T,
    pub exponent: T,
    /// Root mean square of the residuals in log space.
    pub rms_residual: T,
    pub n_points: usize,
}

impl<T: Real> PowerFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.coeff * x.powf(self.exponent)
    }
}

pub fn power_fit<T: Real>(points: &[(T, T)]) -> Result<PowerFit<T>> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "power_fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > T::zero() && y > T::zero())) {
        return Err(Error::domain(
            "power_fit",
            format!("coordinates must be positive, got ({x:?}, {y:?})"),
        ));
    }
    let n = T::from_count(points.len() as u64);
    let logs: Vec<(T, T)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = KahanSum::sum_iter(logs.iter().map(|p| p.0)) / n;
    let my = KahanSum::sum_iter(logs.iter().map(|p| p.1)) / n;
    let sxx = KahanSum::sum_iter(logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    let sxy = KahanSum::sum_iter(logs.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let spread = logs.iter().map(|p| (p.0 - mx).abs()).fold(T::zero(), T::max);
    if !(spread > T::epsilon() * mx.abs().max(T::one())) {
        return Err(Error::Degenerate("power_fit: all x coordinates are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = KahanSum::sum_iter(logs.iter().map(|p| {
        let r = p.1 - (intercept + slope * p.0);
        r * r
    }));
    Ok(PowerFit {
        coeff: intercept.exp(),
        exponent: slope,
        rms_residual: (ss / n).sqrt(),
        n_points: points.len(),
    })
}

/// `sqrt(T) / log T`, the conjectured order of `nu2(T)`.
pub fn conjecture_reference(t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::domain("conjecture_reference", format!("T = {t} must exceed 1")));
    }
    Ok(t.sqrt() / t.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub t: u64,
    pub nu2: u64,
    pub reference: f64,
    pub ratio: f64,
}

impl ReportRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.t,
            self.nu2,
            fmt_real(self.reference),
            fmt_real(self.ratio)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureReport {
    pub rows: Vec<ReportRow>,
    /// Sign flips of `nu2(T) - sqrt(T)/log T` between consecutive rows.
    pub crossings: usize,
}

pub fn conjecture_compare(table: &[(u64, u64)]) -> Result<ConjectureReport> {
    if table.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::domain("conjecture_compare", "T values are not ascending"));
    }
    let mut rows = Vec::with_capacity(table.len());
    for &(t, nu2) in table {
        let reference = conjecture_reference(t as f64)?;
        rows.push(ReportRow {
            t,
            nu2,
            reference,
            ratio: nu2 as f64 / reference,
        });
    }
    let crossings = count_flips(rows.iter().map(|r| r.nu2 as f64 - r.reference));
    Ok(ConjectureReport { rows, crossings })
}

// Zero differences carry the previous sign.
fn count_flips(diffs: impl Iterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut flips = 0;
    for d in diffs {
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && (d > 0.0) != (last > 0.0) {
            flips += 1;
        }
        last = d;
    }
    flips
}

/// Crossings of the staircase `nu2(x)` with `sqrt(x)/log x` for `x` in
/// `(x_min, limit]`, counted from the full record list. Between records
/// the staircase is flat and the reference increasing, so each step is
/// compared against the reference at both of its ends.
pub fn staircase_crossings(records: &[SignChangeRecord], x_min: f64, limit: u64) -> Result<usize> {
    let x_min = x_min.max(std::f64::consts::E * std::f64::consts::E);
    let mut diffs = vec![0.0 - conjecture_reference(x_min)?];
    let mut level = 0u64;
    for r in records.iter().take_while(|r| r.q <= limit) {
        let at = r.q as f64;
        if at > x_min {
            let reference = conjecture_reference(at)?;
            diffs.push(level as f64 - reference);
            diffs.push((level + 1) as f64 - reference);
        }
        level += 1;
        if at <= x_min {
            diffs[0] = level as f64 - conjecture_reference(x_min)?;
        }
    }
    diffs.push(level as f64 - conjecture_reference(limit as f64)?);
    Ok(count_flips(diffs.into_iter()))
}

/// Keeps at most `max_points` of an ascending point list, sampling
/// geometrically in `x` so every decade keeps a similar share.
pub fn thin_geometric(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points || max_points < 2 {
        return points.to_vec();
    }
    let (lo, hi) = (points[0].0.ln(), points[points.len() - 1].0.ln());
    let step = (hi - lo) / (max_points - 1) as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(max_points);
    let mut next = lo;
    for &p in points {
        if p.0.ln() >= next {
            out.push(p);
            next = lo + step * out.len() as f64;
        }
    }
    if out.last() != points.last() {
        out.push(points[points.len() - 1]);
    }
    out
}

/// Fits `a x^b` to the points with `x` in `[x_min, x_max]`.
pub fn windowed_fit(points: &[(f64, f64)], x_min: f64, x_max: f64, max_points: usize) -> Result<PowerFit<f64>> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x >= x_min && x <= x_max && y > 0.0)
        .collect();
    power_fit(&thin_geometric(&inside, max_points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::Direction;

    #[test]
    fn exact_square_root_law() {
        let pts: Vec<(f64, f64)> = (1..20).map(|i| (i as f64 * 3.0, 2.0 * (i as f64 * 3.0).sqrt())).collect();
        let f = power_fit(&pts).unwrap();
        assert!((f.coeff - 2.0).abs() < 1e-12);
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
        assert_eq!(f.n_points, 19);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(power_fit(&[(2.0, 1.0), (2.0, 3.0)]), Err(Error::Degenerate(_))));
        assert!(matches!(power_fit(&[(2.0, 1.0)]), Err(Error::Degenerate(_))));
        assert!(matches!(power_fit(&[(2.0, 1.0), (0.0, 3.0)]), Err(Error::Domain { .. })));
        assert!(matches!(power_fit(&[(2.0, -1.0), (3.0, 3.0)]), Err(Error::Domain { .. })));
    }

    #[test]
    fn f32_fit() {
        let pts: Vec<(f32, f32)> = (1..10).map(|i| (i as f32, 3.0 * (i as f32).powf(0.25))).collect();
        let f = power_fit(&pts).unwrap();
        assert!((f.exponent - 0.25).abs() < 1e-5);
    }

    #[test]
    fn reference_values() {
        assert_eq!(conjecture_reference(2f64.powi(21)).unwrap().round(), 99.0);
        assert_eq!(conjecture_reference(2f64.powi(35)).unwrap().round(), 7641.0);
        assert!(conjecture_reference(1.0).is_err());
        assert!(conjecture_compare(&[(4, 1), (4, 2)]).is_err());
        assert!(conjecture_compare(&[(1, 0)]).is_err());
    }

    #[test]
    fn flat_table_crosses_at_most_once() {
        let table: Vec<(u64, u64)> = (10..30).map(|k| (1u64 << k, 200)).collect();
        assert_eq!(conjecture_compare(&table).unwrap().crossings, 1);
    }

    #[test]
    fn staircase_against_rows() {
        let rec = |q: u64| SignChangeRecord {
            ordinal: 0,
            p: q - 2,
            q,
            direction: Direction::NegToPos,
            d2_before: -0.1,
            d2_after: 0.1,
        };
        // reference is about 10 near 5000; 12 steps early put nu2 above it
        let records: Vec<_> = (0..12).map(|i| rec(100 + 2 * i)).collect();
        assert_eq!(staircase_crossings(&records, 10.0, 1_000_000).unwrap(), 2);
        assert_eq!(staircase_crossings(&[], 10.0, 1_000_000).unwrap(), 0);
    }

    #[test]
    fn thinning_keeps_ends() {
        let pts: Vec<(f64, f64)> = (1..=100_000).map(|i| (i as f64, 1.0)).collect();
        let t = thin_geometric(&pts, 100);
        assert!(t.len() <= 101);
        assert_eq!(t[0], pts[0]);
        assert_eq!(t.last(), pts.last());
    }
}
