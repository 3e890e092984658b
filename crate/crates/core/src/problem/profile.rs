//! Pressure profiles on a normalized support `[0, b]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{input, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A closed-form profile with user-supplied derivatives.
#[derive(Clone)]
pub struct AnalyticProfile {
    b: f64,
    value: ScalarFn,
    d1: ScalarFn,
    d2: Option<ScalarFn>,
}

impl AnalyticProfile {
    pub fn new(
        b: f64,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AnalyticProfile {
            b,
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: None,
        }
    }

    pub fn with_second_derivative(
        mut self,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }
}

impl fmt::Debug for AnalyticProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticProfile")
            .field("b", &self.b)
            .field("has_d2", &self.d2.is_some())
            .finish()
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant of tabulated samples.
#[derive(Debug, Clone)]
pub struct TabulatedProfile {
    y: Vec<f64>,
    p: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedProfile {
    /// Builds the interpolant; the first abscissa is moved to 0.
    pub fn new(y: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if y.len() != p.len() {
            return Err(input("tabulated profile: column lengths differ"));
        }
        if y.len() < 66 {
            return Err(input(format!(
                "tabulated profile needs at least 64 interior samples, got {}",
                y.len().saturating_sub(2)
            )));
        }
        if y.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(input("tabulated profile: abscissae must be strictly increasing"));
        }
        if y.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(input("tabulated profile: non-finite sample"));
        }
        let y0 = y[0];
        let y: Vec<f64> = y.into_iter().map(|v| v - y0).collect();
        let slopes = pchip_slopes(&y, &p);
        Ok(TabulatedProfile { y, p, slopes })
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.y.iter().copied().zip(self.p.iter().copied())
    }

    fn b(&self) -> f64 {
        *self.y.last().unwrap()
    }

    fn cell(&self, y: f64) -> usize {
        let n = self.y.len();
        match self.y.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(k) => k.saturating_sub(1).min(n - 2),
        }
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        let k = self.cell(y);
        let h = self.y[k + 1] - self.y[k];
        let s = (y - self.y[k]) / h;
        let (p0, p1) = (self.p[k], self.p[k + 1]);
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * h * m1;
        let deriv = ((6.0 * s2 - 6.0 * s) * p0 + (-6.0 * s2 + 6.0 * s) * p1) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (3.0 * s2 - 2.0 * s) * m1;
        (value, deriv)
    }

    /// Second derivative from a centered difference over two mean sample spacings.
    fn smoothed_second(&self, y: f64) -> f64 {
        let b = self.b();
        let eta = 2.0 * b / (self.y.len() - 1) as f64;
        let c = y.clamp(eta, b - eta);
        (self.eval(c + eta).0 - 2.0 * self.eval(c).0 + self.eval(c - eta).0) / (eta * eta)
    }
}

/// Fritsch–Butland slopes with the usual three-point, shape-preserving end conditions.
fn pchip_slopes(y: &[f64], p: &[f64]) -> Vec<f64> {
    let n = y.len();
    let h: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (p[k + 1] - p[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

/// An initial (or terminal) pressure profile vanishing at both ends of `[0, b]`.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `height · y (b − y) / b`; the self-similar profile is of this form.
    Parabola { b: f64, height: f64 },
    /// `height · sin(π y / b)`.
    Bump { b: f64, height: f64 },
    Analytic(AnalyticProfile),
    Tabulated(TabulatedProfile),
}

impl Profile {
    pub fn parabola(b: f64, height: f64) -> Result<Self> {
        check_support(b)?;
        check_height(height)?;
        Ok(Profile::Parabola { b, height })
    }

    pub fn bump(b: f64, height: f64) -> Result<Self> {
        check_support(b)?;
        check_height(height)?;
        Ok(Profile::Bump { b, height })
    }

    pub fn support_len(&self) -> f64 {
        match self {
            Profile::Parabola { b, .. } | Profile::Bump { b, .. } => *b,
            Profile::Analytic(a) => a.b,
            Profile::Tabulated(t) => t.b(),
        }
    }

    /// Profile value; zero outside the support.
    pub fn value(&self, y: f64) -> f64 {
        let b = self.support_len();
        if !(0.0..=b).contains(&y) {
            return 0.0;
        }
        match self {
            Profile::Parabola { b, height } => height * y * (b - y) / b,
            Profile::Bump { b, height } => height * (PI * y / b).sin(),
            Profile::Analytic(a) => (a.value)(y),
            Profile::Tabulated(t) => t.eval(y).0,
        }
    }

    /// First derivative, one-sided at the endpoints.
    pub fn d1(&self, y: f64) -> f64 {
        let b = self.support_len();
        let y = y.clamp(0.0, b);
        match self {
            Profile::Parabola { b, height } => height * (b - 2.0 * y) / b,
            Profile::Bump { b, height } => height * PI / b * (PI * y / b).cos(),
            Profile::Analytic(a) => (a.d1)(y),
            Profile::Tabulated(t) => t.eval(y).1,
        }
    }

    /// Second derivative when the profile declares one.
    pub fn d2(&self, y: f64) -> Option<f64> {
        let b = self.support_len();
        let y = y.clamp(0.0, b);
        match self {
            Profile::Parabola { b, height } => Some(-2.0 * height / b),
            Profile::Bump { b, height } => Some(-height * (PI / b).powi(2) * (PI * y / b).sin()),
            Profile::Analytic(a) => a.d2.as_ref().map(|f| f(y)),
            Profile::Tabulated(_) => None,
        }
    }

    /// Second derivative, falling back to a smoothed difference for tabulated data.
    /// The flag is true when the fallback was used.
    pub fn d2_or_smoothed(&self, y: f64) -> (f64, bool) {
        match (self.d2(y), self) {
            (Some(v), _) => (v, false),
            (None, Profile::Tabulated(t)) => (t.smoothed_second(y), true),
            (None, _) => {
                let b = self.support_len();
                let eta = b * 1e-4;
                let c = y.clamp(eta, b - eta);
                let v = (self.value(c + eta) - 2.0 * self.value(c) + self.value(c - eta)) / (eta * eta);
                (v, true)
            }
        }
    }
}

fn check_support(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(input(format!("support length must be positive, got {b}")))
    }
}

fn check_height(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(input(format!("profile height must be positive, got {h}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tabulate(profile: &Profile, n: usize) -> TabulatedProfile {
        let b = profile.support_len();
        let y: Vec<f64> = (0..n).map(|k| b * k as f64 / (n - 1) as f64).collect();
        let p = y.iter().map(|&v| profile.value(v)).collect();
        TabulatedProfile::new(y, p).unwrap()
    }

    #[test]
    fn pchip_reproduces_smooth_profile() {
        let exact = Profile::bump(2.0, 1.5).unwrap();
        let tab = Profile::Tabulated(tabulate(&exact, 257));
        for k in 0..=100 {
            let y = 2.0 * k as f64 / 100.0;
            assert!((tab.value(y) - exact.value(y)).abs() < 1e-6);
        }
        assert!((tab.d1(0.0) - exact.d1(0.0)).abs() < 1e-3);
        assert!((tab.d1(2.0) - exact.d1(2.0)).abs() < 1e-3);
        let (d2, smoothed) = tab.d2_or_smoothed(1.0);
        assert!(smoothed);
        assert!((d2 - exact.d2(1.0).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn pchip_is_shape_preserving() {
        let exact = Profile::parabola(1.0, 1.0).unwrap();
        let tab = Profile::Tabulated(tabulate(&exact, 80));
        // no overshoot past the sample maximum
        let max_sample = 0.25;
        for k in 0..=4000 {
            assert!(tab.value(k as f64 / 4000.0) <= max_sample + 1e-12);
        }
    }

    #[test]
    fn rejects_short_or_unsorted_tables() {
        let y: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert!(TabulatedProfile::new(y.clone(), y.clone()).is_err());
        let mut y: Vec<f64> = (0..70).map(|k| k as f64).collect();
        y.swap(3, 4);
        assert!(TabulatedProfile::new(y.clone(), y).is_err());
    }

    #[test]
    fn values_vanish_outside_support() {
        let p = Profile::parabola(1.0, 2.0).unwrap();
        assert_eq!(p.value(-0.1), 0.0);
        assert_eq!(p.value(1.1), 0.0);
        assert_eq!(p.value(0.0), 0.0);
        assert!((p.d1(0.0) - 2.0).abs() < 1e-15);
        assert!((p.d1(1.0) + 2.0).abs() < 1e-15);
    }
}
