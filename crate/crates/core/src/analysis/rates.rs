//! Log-log rate fits of increments against distances.

use serde::Serialize;

use crate::error::{input, Result};

/// Fits below this coefficient of determination are flagged.
pub const R2_FLOOR: f64 = 0.98;
/// Fewer usable offsets than this are flagged.
pub const MIN_OFFSETS: usize = 6;

/// Declared expected exponent with a tolerance band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTarget {
    pub expected: f64,
    pub lo: f64,
    pub hi: f64,
}

impl RateTarget {
    pub fn new(expected: f64, half_width: f64) -> Self {
        RateTarget {
            expected,
            lo: expected - half_width,
            hi: expected + half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub offsets: Vec<f64>,
    /// Offsets whose increment was not positive.
    pub dropped: Vec<f64>,
    pub flagged: bool,
    pub target: Option<RateTarget>,
}

impl RateFit {
    pub fn with_target(mut self, target: RateTarget) -> Self {
        self.target = Some(target);
        self
    }

    /// Exponent inside the target band and fit quality above the floor.
    pub fn passes(&self) -> bool {
        let in_band = self.target.map_or(true, |t| self.exponent >= t.lo && self.exponent <= t.hi);
        in_band && self.r_squared >= R2_FLOOR
    }
}

/// Least-squares slope of `log increment` against `log distance`.
pub fn holder_exponent(samples: &[(f64, f64)]) -> Result<RateFit> {
    let mut dropped = Vec::new();
    let mut pts = Vec::new();
    for &(d, inc) in samples {
        if d > 0.0 && inc > 0.0 && inc.is_finite() {
            pts.push((d.ln(), inc.ln(), d));
        } else {
            dropped.push(d);
        }
    }
    if pts.len() < 2 {
        return Err(input(format!("rate fit needs two positive samples, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(input("rate fit needs at least two distinct distances"));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    let flagged = r_squared < R2_FLOOR || !dropped.is_empty() || pts.len() < MIN_OFFSETS;
    Ok(RateFit {
        exponent,
        intercept,
        r_squared,
        offsets: pts.iter().map(|p| p.2).collect(),
        dropped,
        flagged,
        target: None,
    })
}

/// Dyadic distances `lo, 2lo, 4lo, …` up to `hi` inclusive.
pub fn dyadic_offsets(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = lo;
    while d <= hi * (1.0 + 1e-12) {
        out.push(d);
        d *= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        dyadic_offsets(1e-4, 0.1).into_iter().map(|d| (d, f(d))).collect()
    }

    #[test]
    fn power_laws() {
        let fit = holder_exponent(&synthetic(|s| s)).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.01 && !fit.flagged);
        let fit = holder_exponent(&synthetic(f64::sqrt)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.01);
        assert!(fit.with_target(RateTarget::new(0.5, 0.1)).passes());
    }

    #[test]
    fn nonpositive_increments_are_dropped() {
        let mut s = synthetic(|s| 3.0 * s);
        s[2].1 = 0.0;
        let fit = holder_exponent(&s).unwrap();
        assert_eq!(fit.dropped, vec![s[2].0]);
        assert!(fit.flagged);
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!(holder_exponent(&[(1.0, 0.0), (2.0, -1.0)]).is_err());
    }

    #[test]
    fn offsets_span() {
        let o = dyadic_offsets(4.0 / 4096.0, 1.0 / 8.0);
        assert_eq!(o.len(), 8);
        assert!((o[7] - 0.125).abs() < 1e-15);
    }
}
