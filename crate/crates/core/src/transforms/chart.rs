//! Square-root chart `y = r²/4` at the left endpoint.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::problem::{CouplingParams, InitialPressure};

/// Default number of chart nodes on `[0, r0]`.
pub const CHART_NODES: usize = 257;

/// Weight `W`, coefficients `A`, `D` and normalized weight `ω0 = W/r^{N−1}`
/// of the weak form in the radial variable.
#[derive(Debug, Clone)]
pub struct RadialChart {
    pressure: InitialPressure,
    coupling: CouplingParams,
    r0: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub omega0: Vec<f64>,
    /// True when `D` comes from a smoothed second difference.
    pub d_smoothed: bool,
    pub bounds: ChartBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl ChartBounds {
    /// `A` and `ω0` bounded above and below by positive constants.
    pub fn holds(&self) -> bool {
        self.a_min > 0.0 && self.a_max.is_finite() && self.omega_min > 0.0 && self.omega_max.is_finite()
    }
}

impl RadialChart {
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn effective_dim(&self) -> f64 {
        self.coupling.effective_dim()
    }

    pub fn coupling(&self) -> &CouplingParams {
        &self.coupling
    }

    pub fn pressure(&self) -> &InitialPressure {
        &self.pressure
    }

    fn h(&self, r: f64) -> f64 {
        self.pressure.h_left(0.25 * r * r)
    }

    /// `W(r) = (r/2)·p0(r²/4)^{1/c_θ}`.
    pub fn weight(&self, r: f64) -> f64 {
        let y = 0.25 * r * r;
        0.5 * r * self.pressure.value(y).max(0.0).powf(1.0 / self.coupling.c_theta())
    }

    /// `A(r) = 4c_θ·p0(r²/4)/r²`, equal to `c_θ·h(r²/4)`.
    pub fn coeff_a(&self, r: f64) -> f64 {
        self.coupling.c_theta() * self.h(r)
    }

    /// `D(r) = p0''(r²/4)`.
    pub fn coeff_d(&self, r: f64) -> f64 {
        self.pressure.d2_or_smoothed(0.25 * r * r).0
    }

    /// `ω0(r) = W(r)/r^{N−1}`, with its limit at `r = 0`.
    pub fn omega0(&self, r: f64) -> f64 {
        let inv = 1.0 / self.coupling.c_theta();
        // W/r^{N−1} = ½·4^{−1/c_θ}·h(r²/4)^{1/c_θ}
        0.5 * 4f64.powf(-inv) * self.h(r).max(0.0).powf(inv)
    }

    /// Least-squares slope of `log W` against `log r` on `samples` log-spaced points.
    pub fn weight_slope(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (0..samples)
            .map(|k| {
                let r = lo * (hi / lo).powf(k as f64 / (samples - 1) as f64);
                (r.ln(), self.weight(r).ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Tabulates the chart on `nodes` uniform points of `[0, r0]`.
///
/// The chart must stay in the left half of the support, where `h = p0/y` is used.
pub fn build_radial_chart(
    p: &InitialPressure,
    coupling: &CouplingParams,
    r0: f64,
    nodes: usize,
) -> Result<RadialChart> {
    let b = p.support_len();
    if !(r0 > 0.0 && 0.25 * r0 * r0 < 0.5 * b) {
        return Err(domain(format!(
            "chart radius {r0} must satisfy 0 < r0²/4 < {}",
            0.5 * b
        )));
    }
    if nodes < 2 {
        return Err(domain("radial chart needs at least two nodes"));
    }
    let mut chart = RadialChart {
        pressure: p.clone(),
        coupling: *coupling,
        r0,
        r: Vec::new(),
        w: Vec::new(),
        a: Vec::new(),
        d: Vec::new(),
        omega0: Vec::new(),
        d_smoothed: p.d2(0.0).is_none(),
        bounds: ChartBounds {
            a_min: f64::INFINITY,
            a_max: f64::NEG_INFINITY,
            omega_min: f64::INFINITY,
            omega_max: f64::NEG_INFINITY,
        },
    };
    for k in 0..nodes {
        let r = r0 * k as f64 / (nodes - 1) as f64;
        let (a, om) = (chart.coeff_a(r), chart.omega0(r));
        chart.r.push(r);
        chart.w.push(chart.weight(r));
        chart.a.push(a);
        chart.d.push(chart.coeff_d(r));
        chart.omega0.push(om);
        let bd = &mut chart.bounds;
        bd.a_min = bd.a_min.min(a);
        bd.a_max = bd.a_max.max(a);
        bd.omega_min = bd.omega_min.min(om);
        bd.omega_max = bd.omega_max.max(om);
    }
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AnalyticProfile, Profile};

    fn linear_times(h: f64) -> InitialPressure {
        let b = 8.0;
        let prof = AnalyticProfile::new(b, move |y| h * y * (b - y) / b, move |y| h * (b - 2.0 * y) / b)
            .with_second_derivative(move |_| -2.0 * h / b);
        InitialPressure::new(Profile::Analytic(prof))
    }

    #[test]
    fn linear_pressure_chart() {
        // p0 ≈ y near 0: W ≈ r⁵/32, ω0 → 1/32, A → 1/2 at θ = 1
        let c = CouplingParams::new(1.0).unwrap();
        let chart = build_radial_chart(&linear_times(1.0), &c, 0.2, 65).unwrap();
        assert!((chart.omega0[0] - 1.0 / 32.0).abs() < 1e-14);
        assert!((chart.a[0] - 0.5).abs() < 1e-14);
        let r = 1e-3;
        assert!((chart.weight(r) / r.powi(5) - 1.0 / 32.0).abs() < 1e-6);
        assert!(chart.bounds.holds());
        assert!(!chart.d_smoothed);
    }

    #[test]
    fn homogeneity_in_h() {
        let c = CouplingParams::new(1.0).unwrap();
        let one = build_radial_chart(&linear_times(1.0), &c, 0.5, 33).unwrap();
        let two = build_radial_chart(&linear_times(2.0), &c, 0.5, 33).unwrap();
        for k in 1..33 {
            assert!((two.w[k] / one.w[k] - 4.0).abs() < 1e-12);
            assert!((two.a[k] / one.a[k] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_must_stay_near_the_endpoint() {
        let c = CouplingParams::new(1.0).unwrap();
        assert!(build_radial_chart(&linear_times(1.0), &c, 4.0, 33).is_err());
        assert!(build_radial_chart(&linear_times(1.0), &c, 0.0, 33).is_err());
    }
}
