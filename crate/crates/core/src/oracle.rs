//! Closed-form self-similar solution with compactly supported density.
//!
//! Density `m(x,t) = t^{-ν} (R − k x²/t^{2ν})_+^{1/θ}` with `ν = 2/(2+θ)` and
//! `k = ν(1−ν)/2`. Its support is `|x| < x*(t) = X t^ν`, `X = sqrt(R/k)`, and
//! particles move on the rays `γ(y,t) = y t^ν` (base time 1). The value
//! function is normalized by `u(0,1) = 0`; outside the support it is continued
//! along straight characteristics tangent to the free boundary.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::lagrangian::{FlowField, Mesh};
use crate::problem::{
    CouplingParams, InitialPressure, Profile, ProblemSpec, TerminalSpec,
};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimilarSolution {
    theta: f64,
    height: f64,
    nu: f64,
    k: f64,
    edge_coeff: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("self-similar solution needs t > 0, got {t}")))
    }
}

impl SelfSimilarSolution {
    pub fn new(theta: f64, height: f64) -> Result<Self> {
        let c = CouplingParams::new(theta)?;
        if !(height.is_finite() && height > 0.0) {
            return Err(domain(format!("profile height R must be positive, got {height}")));
        }
        let nu = c.nu();
        let k = 0.5 * nu * (1.0 - nu);
        Ok(SelfSimilarSolution {
            theta,
            height,
            nu,
            k,
            edge_coeff: (height / k).sqrt(),
        })
    }

    /// Height `R` for which the density has unit mass.
    pub fn unit_mass(theta: f64) -> Result<Self> {
        let probe = Self::new(theta, 1.0)?;
        // mass(R) = R^{1/θ + 1/2} · mass(1)
        let m1 = probe.mass(1.0);
        let height = m1.powf(-1.0 / (1.0 / theta + 0.5));
        Self::new(theta, height)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `X` in `x*(t) = X t^ν`.
    pub fn edge_coeff(&self) -> f64 {
        self.edge_coeff
    }

    pub fn half_width(&self, t: f64) -> f64 {
        self.edge_coeff * t.powf(self.nu)
    }

    pub fn coupling(&self) -> CouplingParams {
        CouplingParams::new(self.theta).expect("validated at construction")
    }

    /// Pressure `p = m^θ` (zero outside the support).
    pub fn pressure(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.pressure_unchecked(x, t))
    }

    fn pressure_unchecked(&self, x: f64, t: f64) -> f64 {
        let s = x * t.powf(-self.nu);
        t.powf(-self.nu * self.theta) * (self.height - self.k * s * s).max(0.0)
    }

    pub fn density(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.pressure(x, t)?.powf(1.0 / self.theta))
    }

    /// Analytic `(m_x, m_t)` strictly inside the support.
    pub fn density_partials(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let (nu, th, k) = (self.nu, self.theta, self.k);
        let q = self.height - k * x * x * t.powf(-2.0 * nu);
        if q <= 0.0 {
            return Err(domain(format!("density partials requested off the support at x = {x}")));
        }
        let common = t.powf(-nu) / th * q.powf(1.0 / th - 1.0);
        let q_x = -2.0 * k * x * t.powf(-2.0 * nu);
        let q_t = 2.0 * nu * k * x * x * t.powf(-2.0 * nu - 1.0);
        let m_x = common * q_x;
        let m_t = -nu * t.powf(-nu - 1.0) * q.powf(1.0 / th) + common * q_t;
        Ok((m_x, m_t))
    }

    /// One-sided `p_x` at `x` (inside, or the interior limit at the edge).
    pub fn pressure_dx(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        if x.abs() > self.half_width(t) {
            return Ok(0.0);
        }
        // t^{-νθ-2ν} = t^{-2}
        Ok(-2.0 * self.k * x / (t * t))
    }

    /// Lagrangian flow with base time 1: `γ(y,t) = y t^ν`.
    pub fn flow_map(&self, y: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        if y.abs() > self.edge_coeff * (1.0 + 1e-14) {
            return Err(domain(format!(
                "flow map: y = {y} outside the base support |y| <= {}",
                self.edge_coeff
            )));
        }
        Ok(y * t.powf(self.nu))
    }

    pub fn flow_dy(&self, t: f64) -> f64 {
        t.powf(self.nu)
    }

    pub fn flow_dt(&self, y: f64, t: f64) -> f64 {
        self.nu * y * t.powf(self.nu - 1.0)
    }

    pub fn flow_dtt(&self, y: f64, t: f64) -> f64 {
        self.nu * (self.nu - 1.0) * y * t.powf(self.nu - 2.0)
    }

    /// `c(t)` with `c(1) = 0` and `c'(t) = −R t^{−νθ}`.
    fn time_constant(&self, t: f64) -> f64 {
        let e = 1.0 - self.nu * self.theta;
        if e.abs() < 1e-12 {
            -self.height * t.ln()
        } else {
            -self.height * (t.powf(e) - 1.0) / e
        }
    }

    /// `u` on the closed support.
    pub fn value_inside(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        if x.abs() > self.half_width(t) * (1.0 + 1e-14) {
            return Err(domain(format!("value_inside: x = {x} outside the support at t = {t}")));
        }
        Ok(-self.nu * x * x / (2.0 * t) + self.time_constant(t))
    }

    /// `u_t` on the support.
    pub fn value_dt_inside(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.nu * x * x / (2.0 * t * t) - self.height * t.powf(-self.nu * self.theta))
    }

    /// Tangency time `s > t` of the exterior characteristic through `(x, t)`.
    fn tangency_time(&self, ax: f64, t: f64) -> f64 {
        let (nu, big_x) = (self.nu, self.edge_coeff);
        let g = |s: f64| big_x * s.powf(nu - 1.0) * ((1.0 - nu) * s + nu * t) - ax;
        let mut lo = t;
        let mut hi = 2.0 * t;
        while g(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Boundary value of `u_x` on the right edge at time `s`.
    fn edge_gradient(&self, s: f64) -> f64 {
        -self.nu * self.edge_coeff * s.powf(self.nu - 1.0)
    }

    /// `u` strictly outside the support.
    pub fn value_exterior(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        let ax = x.abs();
        if ax <= self.half_width(t) {
            return Err(domain(format!("value_exterior: x = {x} is inside the support at t = {t}")));
        }
        let s = self.tangency_time(ax, t);
        let q = self.edge_gradient(s);
        let boundary = -self.nu * self.half_width(s).powi(2) / (2.0 * s) + self.time_constant(s);
        Ok(boundary + 0.5 * q * q * (s - t))
    }

    /// `u_x` anywhere: `−νx/t` inside, the tangent characteristic slope outside.
    pub fn value_dx(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        let ax = x.abs();
        if ax <= self.half_width(t) {
            return Ok(-self.nu * x / t);
        }
        let s = self.tangency_time(ax, t);
        Ok(x.signum() * self.edge_gradient(s))
    }

    /// `u` anywhere.
    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        if x.abs() <= self.half_width(t) {
            self.value_inside(x, t)
        } else {
            self.value_exterior(x, t)
        }
    }

    /// Particle velocity `−u_x`.
    pub fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        Ok(-self.value_dx(x, t)?)
    }

    pub fn free_boundary(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let w = self.half_width(t);
        Ok((-w, w))
    }

    /// `|γ_R''(t) − p0'(edge) γ_y(edge,t)^{−(θ+1)}|` from analytic derivatives.
    pub fn boundary_acceleration_identity(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let big_x = self.edge_coeff;
        let accel = self.flow_dtt(big_x, t);
        let slope = -2.0 * self.k * big_x;
        let z = self.flow_dy(t).powf(-(self.theta + 1.0));
        Ok((accel - slope * z).abs())
    }

    /// `|p(γ(y,t),t) γ_y^θ − p0(y)|` with base time 1.
    pub fn mass_relation_residual(&self, y: f64, t: f64) -> Result<f64> {
        let x = self.flow_map(y, t)?;
        let lhs = self.pressure(x, t)? * self.flow_dy(t).powf(self.theta);
        Ok((lhs - self.pressure(y, 1.0)?).abs())
    }

    /// Total mass at time t.
    pub fn mass(&self, t: f64) -> f64 {
        let w = self.half_width(t);
        quad::endpoint_graded(-w, w, 128, |x| self.pressure_unchecked(x, t).powf(1.0 / self.theta))
    }

    /// Pressure at time `t0` as a profile on `[0, 2 x*(t0)]`.
    pub fn pressure_profile(&self, t0: f64) -> Result<InitialPressure> {
        check_time(t0)?;
        let b = 2.0 * self.half_width(t0);
        // p(x,t0) = t0^{-2} k (x*² − x²) = t0^{-2} k y (b − y)
        let height = self.k * b / (t0 * t0);
        Ok(InitialPressure::new(Profile::parabola(b, height)?))
    }

    /// Planning problem transporting the profile at `t0` to the profile at `t1`.
    ///
    /// Solver time τ corresponds to `t0 + τ`; the Eulerian chart is the
    /// symmetric one, so the origin sits at `−x*(t0)`.
    pub fn planning_problem(&self, t0: f64, t1: f64, window: (f64, f64)) -> Result<ProblemSpec> {
        check_time(t0)?;
        if !(t1 > t0) {
            return Err(domain("planning problem needs t1 > t0"));
        }
        let initial = self.pressure_profile(t0)?;
        let target = self.pressure_profile(t1)?;
        let spec = ProblemSpec::new(
            self.coupling(),
            initial,
            TerminalSpec::planning(target, -self.half_width(t1)),
            t1 - t0,
            window,
        )?;
        Ok(spec.with_origin(-self.half_width(t0)))
    }

    /// Inverts [`planning_problem`](Self::planning_problem): the solution and base
    /// time `t0` when `prob` is a self-similar planning pair (to relative tolerance 1e-9).
    pub fn recognize(prob: &ProblemSpec) -> Option<(Self, f64)> {
        let tol = 1e-9;
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        let TerminalSpec::Planning { target } = &prob.terminal else {
            return None;
        };
        let (b, h) = match prob.initial.profile() {
            Profile::Parabola { b, height } => (*b, height * prob.initial.scale()),
            _ => return None,
        };
        let (b1, h1) = match target.pressure.profile() {
            Profile::Parabola { b, height } => (*b, height * target.pressure.scale()),
            _ => return None,
        };
        let probe = Self::new(prob.theta(), 1.0).ok()?;
        let (nu, k) = (probe.nu, probe.k);
        // h = k b / t0², b/2 = X t0^ν, R = k X²
        let t0 = (k * b / h).sqrt();
        let big_x = 0.5 * b / t0.powf(nu);
        let s = Self::new(prob.theta(), k * big_x * big_x).ok()?;
        let t1 = t0 + prob.horizon;
        let ok = close(b1, 2.0 * s.half_width(t1))
            && close(h1, k * b1 / (t1 * t1))
            && close(prob.origin, -s.half_width(t0))
            && close(target.origin, -s.half_width(t1));
        ok.then_some((s, t0))
    }

    /// The exact flow of [`planning_problem`](Self::planning_problem) sampled on a mesh.
    pub fn sample_flow(&self, t0: f64, mesh: &Mesh) -> Result<FlowField> {
        check_time(t0)?;
        let w0 = self.half_width(t0);
        let mut gamma = Vec::with_capacity(mesh.len());
        for &tau in mesh.t() {
            let stretch = ((t0 + tau) / t0).powf(self.nu);
            for &y in mesh.y() {
                gamma.push((y - w0) * stretch);
            }
        }
        FlowField::new(mesh.clone(), gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn density_values() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        assert_relative_eq!(s.density(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(s.half_width(1.0), 3.0, epsilon = 1e-14);
        assert_eq!(s.density(3.0, 1.0).unwrap(), 0.0);
        assert_eq!(s.density(5.0, 1.7).unwrap(), 0.0);
        assert!(s.density(0.0, 0.0).is_err());
        assert!(s.density(0.0, -1.0).is_err());
    }

    #[test]
    fn flow_values() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        assert_relative_eq!(s.flow_map(1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(s.flow_map(3.0, 8.0).unwrap(), 12.0, epsilon = 1e-12);
        assert!(s.flow_map(3.5, 2.0).is_err());
        for &(y, t) in &[(0.3, 1.5), (-2.0, 1.2), (2.9, 1.9)] {
            let x = s.flow_map(y, t).unwrap();
            let push = s.density(x, t).unwrap() * s.flow_dy(t);
            assert!((push - s.density(y, 1.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_values() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        assert_relative_eq!(s.value_dx(3.0, 1.0).unwrap(), -2.0, epsilon = 1e-14);
        assert_relative_eq!(s.velocity(3.0, 1.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_eq!(s.value_dx(0.0, 1.7).unwrap(), 0.0);
    }

    #[test]
    fn logarithmic_branch() {
        let s = SelfSimilarSolution::new(2.0, 1.3).unwrap();
        let e = std::f64::consts::E;
        // u(0,t) = c(t) = −R ln t
        assert_relative_eq!(s.value_inside(0.0, e).unwrap(), -1.3, epsilon = 1e-14);
    }

    #[test]
    fn hj_inside_from_finite_differences() {
        for theta in [0.5, 1.0, 2.0, 3.0] {
            let s = SelfSimilarSolution::new(theta, 1.0).unwrap();
            for &(frac, t) in &[(0.0, 1.0), (0.5, 1.3), (-0.9, 1.8)] {
                let x = frac * s.half_width(t);
                let ut = fd4(|tt| -s.nu * x * x / (2.0 * tt) + s.time_constant(tt), t, 1e-3);
                let ux = s.value_dx(x, t).unwrap();
                let p = s.pressure(x, t).unwrap();
                assert!((-ut + 0.5 * ux * ux - p).abs() < 1e-10, "theta={theta}");
                assert!((ut - s.value_dt_inside(x, t).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn density_partials_match_differences() {
        let s = SelfSimilarSolution::new(2.0, 1.0).unwrap();
        let (x, t) = (0.7, 1.4);
        let (mx, mt) = s.density_partials(x, t).unwrap();
        assert!((mx - fd4(|v| s.density(v, t).unwrap(), x, 1e-3)).abs() < 1e-9);
        assert!((mt - fd4(|v| s.density(x, v).unwrap(), t, 1e-3)).abs() < 1e-9);
        assert!(s.density_partials(10.0, t).is_err());
    }

    #[test]
    fn exterior_matches_at_the_edge() {
        for theta in [0.5, 1.0, 2.0] {
            let s = SelfSimilarSolution::new(theta, 1.0).unwrap();
            let t = 1.4;
            let w = s.half_width(t);
            let inside = s.value_inside(w, t).unwrap();
            let outside = s.value_exterior(w * (1.0 + 1e-12), t).unwrap();
            assert!((inside - outside).abs() < 1e-8);
            let grad_out = s.value_dx(w * (1.0 + 1e-12), t).unwrap();
            let boundary_speed = s.nu * w / t;
            assert!((grad_out + boundary_speed).abs() < 1e-5);
            assert!(s.value_exterior(0.5 * w, t).is_err());
        }
    }

    #[test]
    fn exterior_hj_residual() {
        for theta in [0.5, 1.0, 2.0] {
            let s = SelfSimilarSolution::new(theta, 1.0).unwrap();
            for &t in &[1.0, 1.5, 2.0] {
                for &x in &[2.0 * s.half_width(t), -1.3 * s.half_width(t)] {
                    let ut = fd4(|tt| s.value_exterior(x, tt).unwrap(), t, 1e-3);
                    let ux = fd4(|xx| s.value_exterior(xx, t).unwrap(), x, 1e-3);
                    assert!((-ut + 0.5 * ux * ux).abs() < 1e-8, "theta={theta} t={t} x={x}");
                    assert!((ux - s.value_dx(x, t).unwrap()).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn acceleration_and_boundary() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        let (l, r) = s.free_boundary(1.0).unwrap();
        assert_relative_eq!(l, -3.0, epsilon = 1e-14);
        assert_relative_eq!(r, 3.0, epsilon = 1e-14);
        assert!(s.boundary_acceleration_identity(2.0).unwrap() < 1e-10);
        for k in 1..50 {
            let t = 0.1 * k as f64;
            // right edge bends back toward the positive phase
            assert!(s.flow_dtt(s.edge_coeff(), t) < 0.0);
            assert!(s.flow_dtt(-s.edge_coeff(), t) > 0.0);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        let m1 = s.mass(1.0);
        assert_relative_eq!(m1, 4.0, epsilon = 1e-10);
        for t in [1.2, 1.7, 2.0, 3.0] {
            assert!((s.mass(t) - m1).abs() < 1e-8);
        }
        let u = SelfSimilarSolution::unit_mass(2.0).unwrap();
        assert!((u.mass(1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn profile_matches_pressure() {
        let s = SelfSimilarSolution::new(0.5, 0.8).unwrap();
        let p = s.pressure_profile(1.5).unwrap();
        let w = s.half_width(1.5);
        for k in 0..=20 {
            let y = 2.0 * w * k as f64 / 20.0;
            assert!((p.value(y) - s.pressure(y - w, 1.5).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn planning_pair_is_recognized() {
        let s = SelfSimilarSolution::new(2.0, 0.7).unwrap();
        let prob = s.planning_problem(1.3, 2.1, (0.2, 0.6)).unwrap();
        let (r, t0) = SelfSimilarSolution::recognize(&prob).unwrap();
        assert_relative_eq!(t0, 1.3, epsilon = 1e-12);
        assert_relative_eq!(r.height(), 0.7, epsilon = 1e-12);
        assert!(SelfSimilarSolution::recognize(&prob.translated(0.5)).is_none());
        let bump = ProblemSpec {
            initial: InitialPressure::new(Profile::bump(prob.support_len(), 1.0).unwrap()),
            ..prob
        };
        assert!(SelfSimilarSolution::recognize(&bump).is_none());
    }
}
