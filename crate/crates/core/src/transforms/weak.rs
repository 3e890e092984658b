//! Weak form of the `Z` equation in the radial chart, tested against
//! functions that may touch the axis `r = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::chart::RadialChart;
use super::fields::NodeField;
use crate::error::{input, Result};
use crate::lagrangian::locate;
use crate::quad;

type ZFn = Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>;

/// `Z` as a function of the Lagrangian pair `(y, t)`.
#[derive(Clone)]
pub enum RadialSolution {
    /// Nodal values, bilinearly interpolated cell by cell.
    Grid(NodeField),
    /// Closure returning `[Z, Z_y, Z_t]`.
    Analytic(ZFn),
}

impl std::fmt::Debug for RadialSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadialSolution::Grid(z) => f.debug_tuple("Grid").field(&z.mesh().ny()).field(&z.mesh().nt()).finish(),
            RadialSolution::Analytic(_) => f.write_str("Analytic"),
        }
    }
}

impl RadialSolution {
    pub fn analytic(f: impl Fn(f64, f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        RadialSolution::Analytic(Arc::new(f))
    }

    /// `[Z, Z_y, Z_t]` at `(y, t)`.
    pub fn eval(&self, y: f64, t: f64) -> [f64; 3] {
        match self {
            RadialSolution::Analytic(f) => f(y, t),
            RadialSolution::Grid(z) => {
                let mesh = z.mesh();
                let (ys, ts) = (mesh.y(), mesh.t());
                let i = locate(ys, y);
                let j = locate(ts, t);
                let (hy, ht) = (ys[i + 1] - ys[i], ts[j + 1] - ts[j]);
                let a = (y - ys[i]) / hy;
                let b = (t - ts[j]) / ht;
                let (z00, z10, z01, z11) = (z.get(i, j), z.get(i + 1, j), z.get(i, j + 1), z.get(i + 1, j + 1));
                let val = (1.0 - b) * ((1.0 - a) * z00 + a * z10) + b * ((1.0 - a) * z01 + a * z11);
                let zy = ((1.0 - b) * (z10 - z00) + b * (z11 - z01)) / hy;
                let zt = ((1.0 - a) * (z01 - z00) + a * (z11 - z10)) / ht;
                [val, zy, zt]
            }
        }
    }

    fn time_range(&self) -> Option<(f64, f64)> {
        match self {
            RadialSolution::Grid(z) => Some((0.0, z.mesh().horizon())),
            RadialSolution::Analytic(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestShape {
    /// `(1 − (r/R)²)²` on `[0, R]`; smooth and even across the axis.
    AxisTouching { radius: f64 },
    /// Polynomial bump on `[inner, outer]`, away from the axis.
    Annulus { inner: f64, outer: f64 },
}

/// Separable test function `Φ(r,t) = φ(r)·ψ(t)` with `ψ = sin²` on `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub shape: TestShape,
    pub window: (f64, f64),
}

impl TestFunction {
    pub fn axis(radius: f64, window: (f64, f64)) -> Self {
        TestFunction {
            shape: TestShape::AxisTouching { radius },
            window,
        }
    }

    pub fn annulus(inner: f64, outer: f64, window: (f64, f64)) -> Self {
        TestFunction {
            shape: TestShape::Annulus { inner, outer },
            window,
        }
    }

    /// Radial support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            TestShape::AxisTouching { radius } => (0.0, radius),
            TestShape::Annulus { inner, outer } => (inner, outer),
        }
    }

    /// `(φ, φ_r)`.
    pub fn phi(&self, r: f64) -> (f64, f64) {
        match self.shape {
            TestShape::AxisTouching { radius } => {
                if r >= radius {
                    return (0.0, 0.0);
                }
                let s = 1.0 - (r / radius).powi(2);
                (s * s, -4.0 * r * s / (radius * radius))
            }
            TestShape::Annulus { inner, outer } => {
                if r <= inner || r >= outer {
                    return (0.0, 0.0);
                }
                let k = (4.0 / (outer - inner).powi(2)).powi(2);
                let q = (r - inner) * (outer - r);
                (k * q * q, 2.0 * k * q * (inner + outer - 2.0 * r))
            }
        }
    }

    /// `(ψ, ψ_t)`.
    pub fn psi(&self, t: f64) -> (f64, f64) {
        let (a, b) = self.window;
        if t <= a || t >= b {
            return (0.0, 0.0);
        }
        let w = PI / (b - a);
        let s = (w * (t - a)).sin();
        (s * s, w * (2.0 * w * (t - a)).sin())
    }

    fn validate(&self, chart: &RadialChart, time: Option<(f64, f64)>) -> Result<()> {
        let (lo, hi) = self.support();
        if !(0.0 <= lo && lo < hi && hi <= chart.r0() * (1.0 + 1e-12)) {
            return Err(input(format!(
                "test support [{lo}, {hi}] must lie in the chart [0, {}]",
                chart.r0()
            )));
        }
        let (a, b) = self.window;
        if !(a < b) {
            return Err(input("test time window is empty"));
        }
        if let Some((t0, t1)) = time {
            if a < t0 || b > t1 {
                return Err(input(format!(
                    "test window [{a}, {b}] must lie inside the solution's times [{t0}, {t1}]"
                )));
            }
        }
        Ok(())
    }
}

fn breaks(lo: f64, hi: f64, nodes: Option<&[f64]>, fallback: usize) -> Vec<f64> {
    let mut out = vec![lo];
    match nodes {
        Some(n) => out.extend(n.iter().copied().filter(|&v| v > lo && v < hi)),
        None => out.extend((1..fallback).map(|k| lo + (hi - lo) * k as f64 / fallback as f64)),
    }
    out.push(hi);
    out
}

/// `∬ W [β(Z̃) Z̃_t Φ_t + A Z̃_r Φ_r − D Z̃ Φ] dr dt` by tensor Gauss–Legendre on
/// panels aligned with the mesh cells (mapped through `r = 2√y`).
pub fn weighted_weak_residual(chart: &RadialChart, z: &RadialSolution, test: &TestFunction) -> Result<f64> {
    test.validate(chart, z.time_range())?;
    let theta = chart.coupling().theta();
    let beta = |zv: f64| zv.powf(-1.0 - 1.0 / (theta + 1.0)) / (theta + 1.0);
    let (rlo, rhi) = test.support();
    let (ta, tb) = test.window;
    let (y_nodes, t_nodes) = match z {
        RadialSolution::Grid(f) => (
            Some(f.mesh().y().iter().map(|y| 2.0 * y.sqrt()).collect::<Vec<_>>()),
            Some(f.mesh().t().to_vec()),
        ),
        RadialSolution::Analytic(_) => (None, None),
    };
    let r_breaks = breaks(rlo, rhi, y_nodes.as_deref(), 32);
    let t_breaks = breaks(ta, tb, t_nodes.as_deref(), 32);
    let rule = quad::gl16();

    // radial quadrature points with the time-independent factors
    let mut radial = Vec::new();
    for w in r_breaks.windows(2) {
        for (r, wr) in rule.mapped(w[0], w[1]) {
            let (phi, phi_r) = test.phi(r);
            radial.push((r, wr * chart.weight(r), phi, phi_r, chart.coeff_a(r), chart.coeff_d(r)));
        }
    }
    let panels: Vec<f64> = t_breaks
        .par_windows(2)
        .map(|w| {
            let mut acc = 0.0;
            for (t, wt) in rule.mapped(w[0], w[1]) {
                let (psi, psi_t) = test.psi(t);
                let mut inner = 0.0;
                for &(r, ww, phi, phi_r, a, d) in &radial {
                    let [zv, zy, zt] = z.eval(0.25 * r * r, t);
                    let zr = 0.5 * r * zy;
                    inner += ww * (beta(zv) * zt * phi * psi_t + a * zr * phi_r * psi - d * zv * phi * psi);
                }
                acc += wt * inner;
            }
            acc
        })
        .collect();
    Ok(panels.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CouplingParams, InitialPressure, Profile};
    use crate::transforms::build_radial_chart;

    #[test]
    fn constant_z_without_curvature_is_exact() {
        // D ≡ 0 needs a profile linear near the axis
        let prof = crate::problem::AnalyticProfile::new(4.0, |y| y * (4.0 - y) / 4.0, |y| 1.0 - y / 2.0)
            .with_second_derivative(|_| 0.0);
        let p = InitialPressure::new(Profile::Analytic(prof));
        let c = CouplingParams::new(1.0).unwrap();
        let chart = build_radial_chart(&p, &c, 1.0, 33).unwrap();
        let z = RadialSolution::analytic(|_, _| [2.0, 0.0, 0.0]);
        let test = TestFunction::axis(1.0, (0.2, 0.8));
        assert_eq!(weighted_weak_residual(&chart, &z, &test).unwrap(), 0.0);
    }

    #[test]
    fn support_violations_are_rejected() {
        let p = InitialPressure::new(Profile::parabola(4.0, 1.0).unwrap());
        let c = CouplingParams::new(1.0).unwrap();
        let chart = build_radial_chart(&p, &c, 1.0, 33).unwrap();
        let z = RadialSolution::analytic(|_, _| [1.0, 0.0, 0.0]);
        assert!(weighted_weak_residual(&chart, &z, &TestFunction::axis(1.5, (0.2, 0.8))).is_err());
        assert!(weighted_weak_residual(&chart, &z, &TestFunction::annulus(0.5, 0.2, (0.2, 0.8))).is_err());
        assert!(weighted_weak_residual(&chart, &z, &TestFunction::axis(1.0, (0.8, 0.2))).is_err());
    }

    #[test]
    fn test_function_derivatives() {
        for t in [TestFunction::axis(0.7, (0.0, 1.0)), TestFunction::annulus(0.2, 0.9, (0.0, 1.0))] {
            let h = 1e-6;
            for k in 1..20 {
                let r = 0.05 * k as f64 + 0.013;
                let fd = (t.phi(r + h).0 - t.phi(r - h).0) / (2.0 * h);
                assert!((fd - t.phi(r).1).abs() < 1e-6, "{t:?} r={r}: {fd} vs {}", t.phi(r).1);
                let s = 0.05 * k as f64;
                let fd = (t.psi(s + h).0 - t.psi(s - h).0) / (2.0 * h);
                assert!((fd - t.psi(s).1).abs() < 1e-6);
            }
        }
    }
}
