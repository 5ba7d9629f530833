use crate::io::fmt_real;

pub const ENVELOPE_HEADER: &str = "x,abs_d2,delta2,d,delta";

/// `d2`, `d` and their running envelopes at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub x: f64,
    pub d2: f64,
    pub delta2: f64,
    /// `Li(x) - pi(x)`.
    pub d: f64,
    pub delta: f64,
}

impl EnvelopeSample {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            fmt_real(self.x),
            fmt_real(self.d2.abs()),
            fmt_real(self.delta2),
            fmt_real(self.d),
            fmt_real(self.delta)
        )
    }
}

/// Points where an envelope increased, thinned to the latest point in each
/// bin `[ratio^k, ratio^(k+1))`. Bins are fixed, so thinning a merged list
/// again gives the same result as thinning in one pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvelopeEvents {
    ratio: f64,
    points: Vec<(f64, f64)>,
}

impl EnvelopeEvents {
    pub fn new(ratio: f64) -> Self {
        Self {
            ratio,
            points: Vec::new(),
        }
    }

    fn bin(&self, x: f64) -> Option<i64> {
        (self.ratio > 1.0).then(|| (x.ln() / self.ratio.ln()).floor() as i64)
    }

    /// Points must arrive in ascending `x`.
    pub fn push(&mut self, x: f64, value: f64) {
        let bin = self.bin(x);
        let same = bin.is_some() && self.points.last().is_some_and(|l| self.bin(l.0) == bin);
        if same {
            *self.points.last_mut().expect("nonempty") = (x, value);
        } else {
            self.points.push((x, value));
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}
