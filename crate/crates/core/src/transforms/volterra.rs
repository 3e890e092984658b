//! Bounded solutions of `y V_y + b(y) V = F` near the regular-singular point `y = 0`.

use std::fmt;
use std::sync::Arc;

use gauss_quad::jacobi::GaussJacobi;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::problem::{CouplingParams, InitialPressure};
use crate::quad;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nodes of the λ-rule adapted to the `λ^{b(0)−1}` factor.
pub const VOLTERRA_NODES: usize = 64;

#[derive(Clone)]
pub struct RegularSingularODE {
    b: ScalarFn,
    forcing: ScalarFn,
    rho: f64,
    b0: f64,
}

impl fmt::Debug for RegularSingularODE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegularSingularODE")
            .field("b0", &self.b0)
            .field("rho", &self.rho)
            .finish()
    }
}

impl RegularSingularODE {
    pub fn new(
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        forcing: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho: f64,
    ) -> Result<Self> {
        let b0 = b(0.0);
        if !(b0.is_finite() && b0 > 0.0) {
            return Err(domain(format!("b(0) must be positive for an integrable kernel, got {b0}")));
        }
        if !(rho > 0.0) {
            return Err(domain("domain length must be positive"));
        }
        Ok(RegularSingularODE {
            b: Arc::new(b),
            forcing: Arc::new(forcing),
            rho,
            b0,
        })
    }

    /// `b(y) = (1+c_θ) p0'(y) / (c_θ h(y))` from a pressure profile, with `b(0) = (1+c_θ)/c_θ`.
    pub fn from_pressure(
        p: &InitialPressure,
        coupling: &CouplingParams,
        forcing: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho: f64,
    ) -> Result<Self> {
        let c = coupling.c_theta();
        let b0 = coupling.b0();
        let p = p.clone();
        Self::new(
            move |y| if y <= 0.0 { b0 } else { (1.0 + c) * p.d1(y) / (c * p.h_left(y)) },
            forcing,
            rho,
        )
    }

    pub fn b(&self, y: f64) -> f64 {
        (self.b)(y)
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn forcing(&self, y: f64) -> f64 {
        (self.forcing)(y)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `y V_y + b V − F` with `V_y` supplied.
    pub fn residual(&self, y: f64, v: f64, vy: f64) -> f64 {
        y * vy + self.b(y) * v - self.forcing(y)
    }
}

/// Rejects `b` whose increment `b(s) − b(0)` does not vanish like a positive power of `s`.
fn holder_probe(ode: &RegularSingularODE, y: f64) -> Result<()> {
    let scale = ode.b0.abs().max(1.0);
    let pts: Vec<(f64, f64)> = (4..44)
        .map(|k| {
            let s = y * 0.5f64.powi(k);
            (s, (ode.b(s) - ode.b0).abs())
        })
        .collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(domain("b is not finite near 0"));
    }
    let live: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1 > 1e-13 * scale).collect();
    if live.len() < 6 {
        return Ok(());
    }
    // increments on the finest dyadic scales must shrink geometrically
    let tail = &live[live.len() - 6..];
    let n = tail.len() as f64;
    let (mx, my) = (
        tail.iter().map(|p| p.0.ln()).sum::<f64>() / n,
        tail.iter().map(|p| p.1.ln()).sum::<f64>() / n,
    );
    let sxy: f64 = tail.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if slope < 0.1 {
        return Err(domain(format!(
            "(b(s) − b(0))/s is not integrable at 0: fitted Hölder exponent {slope:.3}"
        )));
    }
    Ok(())
}

/// `μ(y) = exp ∫_0^y (b(s) − b(0))/s ds`, computed with `s = y w²`.
pub fn mu_integrating_factor(ode: &RegularSingularODE, y: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(domain("integrating factor needs y >= 0"));
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    holder_probe(ode, y)?;
    Ok(log_mu(ode, y).exp())
}

fn log_mu(ode: &RegularSingularODE, y: f64) -> f64 {
    quad::composite(0.0, 1.0, 8, |w| 2.0 * (ode.b(y * w * w) - ode.b0) / w)
}

/// `V(y) = ∫_0^1 λ^{b(0)−1} μ(λy)/μ(y) F(λy) dλ` at each grid point.
pub fn volterra_solve(ode: &RegularSingularODE, grid: &[f64]) -> Result<Vec<f64>> {
    let beta = ode.b0 - 1.0;
    let rule = GaussJacobi::new(VOLTERRA_NODES, 0.0, beta)
        .map_err(|e| domain(format!("λ-quadrature for b(0) = {}: {e}", ode.b0)))?;
    if let Some(&y) = grid.iter().find(|&&y| y < 0.0 || y > ode.rho * (1.0 + 1e-12)) {
        return Err(domain(format!("grid point {y} outside [0, {}]", ode.rho)));
    }
    if let Some(&ymax) = grid.iter().max_by(|a, b| a.total_cmp(b)) {
        if ymax > 0.0 {
            holder_probe(ode, ymax)?;
        }
    }
    // the rule integrates (1+x)^β g on [−1, 1]; on [0, 1] that is 2^β ∫ λ^β g
    let norm = 2f64.powf(-beta);
    Ok(grid
        .par_iter()
        .map(|&y| {
            if y == 0.0 {
                return ode.forcing(0.0) / ode.b0;
            }
            let lm_y = log_mu(ode, y);
            norm * rule.integrate(0.0, 1.0, |lam| {
                let s = lam * y;
                let lm = if s > 0.0 { log_mu(ode, s) } else { 0.0 };
                (lm - lm_y).exp() * ode.forcing(s)
            })
        })
        .collect())
}

/// Integrates the ODE from `(y_start, v_start)` to `y_end` with RK4 in `s = ln y`.
pub fn shoot(ode: &RegularSingularODE, y_start: f64, v_start: f64, y_end: f64, steps_per_unit: usize) -> f64 {
    let (s0, s1) = (y_start.ln(), y_end.ln());
    let n = (((s1 - s0).abs() * steps_per_unit as f64).ceil() as usize).max(1);
    let h = (s1 - s0) / n as f64;
    // dV/ds = F(e^s) − b(e^s) V
    let rhs = |s: f64, v: f64| {
        let y = s.exp();
        ode.forcing(y) - ode.b(y) * v
    };
    let mut v = v_start;
    for k in 0..n {
        let s = s0 + k as f64 * h;
        let k1 = rhs(s, v);
        let k2 = rhs(s + 0.5 * h, v + 0.5 * h * k1);
        let k3 = rhs(s + 0.5 * h, v + 0.5 * h * k2);
        let k4 = rhs(s + h, v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficients() {
        let ode = RegularSingularODE::new(|_| 3.0, |_| 1.5, 1.0).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        for v in volterra_solve(&ode, &grid).unwrap() {
            assert!((v - 0.5).abs() < 1e-13);
        }
        for k in 1..=10 {
            assert!((mu_integrating_factor(&ode, k as f64 / 10.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn monomial_forcing() {
        let b0 = 2.5;
        for k in [1, 2, 5] {
            let ode = RegularSingularODE::new(move |_| b0, move |y: f64| y.powi(k), 2.0).unwrap();
            let grid = [0.0, 0.3, 1.0, 2.0];
            let v = volterra_solve(&ode, &grid).unwrap();
            for (y, v) in grid.iter().zip(v) {
                assert!((v - y.powi(k) / (b0 + k as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integrating_factors() {
        let ode = RegularSingularODE::new(|y| 3.0 + y, |_| 1.0, 1.0).unwrap();
        let ode2 = RegularSingularODE::new(|y: f64| 3.0 + y.sqrt(), |_| 1.0, 1.0).unwrap();
        for y in [0.01, 0.2, 1.0] {
            assert!((mu_integrating_factor(&ode, y).unwrap() - y.exp()).abs() < 1e-13);
            assert!((mu_integrating_factor(&ode2, y).unwrap() - (2.0 * y.sqrt()).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn nonintegrable_coefficients_are_rejected() {
        assert!(RegularSingularODE::new(|_| -1.0, |_| 1.0, 1.0).is_err());
        assert!(RegularSingularODE::new(|_| 0.0, |_| 1.0, 1.0).is_err());
        // jump at the origin
        let jump = RegularSingularODE::new(|y| if y > 0.0 { 4.0 } else { 3.0 }, |_| 1.0, 1.0).unwrap();
        assert!(mu_integrating_factor(&jump, 0.5).is_err());
        assert!(volterra_solve(&jump, &[0.0, 0.5]).is_err());
        // logarithmic modulus: increments decay slower than any power
        let slow = RegularSingularODE::new(|y: f64| if y > 0.0 { 3.0 + 1.0 / (1.0 - y.ln()) } else { 3.0 }, |_| 1.0, 1.0)
            .unwrap();
        assert!(mu_integrating_factor(&slow, 0.5).is_err());
    }

    #[test]
    fn trace_at_origin() {
        let ode = RegularSingularODE::new(|y| 2.0 + y * y, |y: f64| 3.0 + y.sin(), 1.0).unwrap();
        let v = volterra_solve(&ode, &[0.0, 1e-8]).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-15);
        assert!((v[1] - 1.5).abs() < 1e-7);
    }

    #[test]
    fn shooting_preserves_exact_solution_forward() {
        // V = 1/b0 for constant data; forward shooting damps perturbations
        let ode = RegularSingularODE::new(|_| 2.0, |_| 1.0, 1.0).unwrap();
        let v = shoot(&ode, 1e-3, 0.5 + 1.0, 1.0, 100);
        assert!((v - 0.5).abs() < 1e-5);
    }
}
