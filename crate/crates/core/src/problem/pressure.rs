use serde::Serialize;

use super::profile::Profile;
use crate::error::{domain, input, Result};
use crate::quad;

/// Number of interior points of the fixed validation grid.
pub const VALIDATION_POINTS: usize = 1024;

/// Declared one-sided smoothness `C^{order, sigma}` of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smoothness {
    pub order: u32,
    pub sigma: f64,
}

impl Default for Smoothness {
    fn default() -> Self {
        Smoothness { order: 2, sigma: 0.5 }
    }
}

/// Pressure `p0 = m0^θ` on the normalized support `[0, b]`.
#[derive(Debug, Clone)]
pub struct InitialPressure {
    profile: Profile,
    scale: f64,
    smoothness: Smoothness,
}

impl InitialPressure {
    pub fn new(profile: Profile) -> Self {
        let smoothness = match profile {
            Profile::Tabulated(_) => Smoothness { order: 1, sigma: 1.0 },
            _ => Smoothness::default(),
        };
        InitialPressure {
            profile,
            scale: 1.0,
            smoothness,
        }
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Multiplier applied on top of the profile (1 unless renormalized).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support_len(&self) -> f64 {
        self.profile.support_len()
    }

    pub fn value(&self, y: f64) -> f64 {
        self.scale * self.profile.value(y)
    }

    pub fn d1(&self, y: f64) -> f64 {
        self.scale * self.profile.d1(y)
    }

    pub fn d2(&self, y: f64) -> Option<f64> {
        self.profile.d2(y).map(|v| self.scale * v)
    }

    pub fn d2_or_smoothed(&self, y: f64) -> (f64, bool) {
        let (v, flag) = self.profile.d2_or_smoothed(y);
        (self.scale * v, flag)
    }

    /// One-sided slope `p0'(0⁺)`.
    pub fn slope_left(&self) -> f64 {
        self.d1(0.0)
    }

    /// One-sided slope `p0'(b⁻)`.
    pub fn slope_right(&self) -> f64 {
        self.d1(self.support_len())
    }

    /// `h(y) = p0(y)/y` near the left endpoint, with `h(0) = p0'(0⁺)`.
    pub fn h_left(&self, y: f64) -> f64 {
        if y <= 0.0 {
            self.slope_left()
        } else {
            self.value(y) / y
        }
    }

    /// Mirror of [`h_left`](Self::h_left) at the right endpoint, in the distance `b − y`.
    pub fn h_right(&self, y: f64) -> f64 {
        let b = self.support_len();
        if y >= b {
            -self.slope_right()
        } else {
            self.value(y) / (b - y)
        }
    }

    /// Samples on the fixed validation grid (interior points only).
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let b = self.support_len();
        let h = b / (VALIDATION_POINTS + 1) as f64;
        (1..=VALIDATION_POINTS)
            .map(|k| {
                let y = k as f64 * h;
                (y, self.value(y))
            })
            .collect()
    }

    /// Total mass of `m0 = p0^{1/θ}`.
    pub fn mass(&self, theta: f64) -> f64 {
        let b = self.support_len();
        quad::endpoint_graded(0.0, b, 128, |y| self.value(y).max(0.0).powf(1.0 / theta))
    }

    /// Copy rescaled so that `m0` has unit mass.
    pub fn renormalized(&self, theta: f64) -> Result<Self> {
        let mass = self.mass(theta);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(domain(format!("cannot renormalize profile of mass {mass}")));
        }
        let mut out = self.clone();
        out.scale *= mass.powf(-theta);
        Ok(out)
    }

    /// Density `m0(y) = p0(y)^{1/θ}`.
    pub fn density(&self, theta: f64, y: f64) -> f64 {
        self.value(y).max(0.0).powf(1.0 / theta)
    }
}

/// Constants of the nondegeneracy and semiconvexity hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisBounds {
    /// Sandwich constant `C0`.
    pub c0: f64,
    /// Lower bound `−K0` for the second derivative.
    pub k0: f64,
    /// Width of the one-sided neighbourhoods where the profile is concave.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Grid point with the smallest margin.
    pub worst_y: Option<f64>,
    /// Smallest signed margin; negative means violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub bounds: HypothesisBounds,
    pub checks: Vec<HypothesisCheck>,
    pub mass: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Tracks the worst margin over a sweep of grid points.
struct Worst {
    name: &'static str,
    y: Option<f64>,
    margin: f64,
    tol: f64,
}

impl Worst {
    fn new(name: &'static str, tol: f64) -> Self {
        Worst {
            name,
            y: None,
            margin: f64::INFINITY,
            tol,
        }
    }

    fn see(&mut self, y: f64, margin: f64) {
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.y = Some(y);
        }
    }

    fn finish(self) -> HypothesisCheck {
        HypothesisCheck {
            name: self.name,
            passed: self.margin >= -self.tol,
            worst_y: self.y,
            margin: self.margin,
        }
    }
}

/// Tolerance for the unit-mass hypothesis.
pub const MASS_TOL: f64 = 1e-6;

/// Checks the hypotheses on the initial pressure on the fixed validation grid.
pub fn validate_initial_pressure(
    p: &InitialPressure,
    theta: f64,
    bounds: &HypothesisBounds,
) -> Result<ValidationReport> {
    if !(bounds.c0 > 0.0 && bounds.k0 >= 0.0 && bounds.delta > 0.0) {
        return Err(input("hypothesis constants must be positive"));
    }
    if !(theta > 0.0) {
        return Err(domain("coupling exponent must be positive"));
    }
    let b = p.support_len();
    let grid = p.samples();
    let h = b / (VALIDATION_POINTS + 1) as f64;
    let pmax = grid.iter().map(|s| s.1).fold(0.0, f64::max);
    let rel = 1e-12 * pmax.max(1.0);

    let mut checks = Vec::new();

    let mut endpoint = Worst::new("endpoint_zero", rel);
    endpoint.see(0.0, -p.value(0.0).abs());
    endpoint.see(b, -p.value(b).abs());
    checks.push(endpoint.finish());

    let mut positive = Worst::new("positivity", 0.0);
    let mut lower = Worst::new("sandwich_lower", rel);
    let mut upper = Worst::new("sandwich_upper", rel);
    for &(y, v) in &grid {
        let dist = y.min(b - y);
        positive.see(y, if v > 0.0 { v } else { v.min(-f64::MIN_POSITIVE) });
        lower.see(y, v - dist / bounds.c0);
        upper.see(y, bounds.c0 * dist - v);
    }
    checks.push(positive.finish());
    checks.push(lower.finish());
    checks.push(upper.finish());

    let mut left = Worst::new("slope_left", 0.0);
    let sl = p.slope_left();
    left.see(0.0, if sl > 0.0 { sl } else { sl.min(-f64::MIN_POSITIVE) });
    checks.push(left.finish());
    let mut right = Worst::new("slope_right", 0.0);
    let sr = p.slope_right();
    right.see(b, if sr < 0.0 { -sr } else { (-sr).min(-f64::MIN_POSITIVE) });
    checks.push(right.finish());

    let tol = 1e-8 * bounds.k0.max(f64::MIN_POSITIVE);
    let mut concave = Worst::new("concave_near_endpoints", tol);
    let mut semiconvex = Worst::new("second_derivative_lower_bound", tol);
    let value_at = |k: usize| if k == 0 || k == VALIDATION_POINTS + 1 { p.value(k as f64 * h) } else { grid[k - 1].1 };
    for k in 1..=VALIDATION_POINTS {
        let y = k as f64 * h;
        let dd = (value_at(k + 1) - 2.0 * value_at(k) + value_at(k - 1)) / (h * h);
        if y < bounds.delta || y > b - bounds.delta {
            concave.see(y, -dd);
        }
        semiconvex.see(y, dd + bounds.k0);
    }
    checks.push(concave.finish());
    checks.push(semiconvex.finish());

    let mass = p.mass(theta);
    checks.push(HypothesisCheck {
        name: "unit_mass",
        passed: (mass - 1.0).abs() <= MASS_TOL,
        worst_y: None,
        margin: MASS_TOL - (mass - 1.0).abs(),
    });

    Ok(ValidationReport {
        bounds: *bounds,
        checks,
        mass,
    })
}
