//! Eulerian fields recovered from a Lagrangian flow.

use rayon::prelude::*;
use serde::Serialize;

use super::curves::boundary_velocities;
use crate::error::{input, Error, Result};
use crate::lagrangian::FlowField;
use crate::problem::{CouplingParams, InitialPressure, ProblemSpec};

/// Cells around the free boundary excluded from PDE residuals.
pub const COLLAR: usize = 2;

/// Values on a uniform `x` grid times the mesh times, stored time-major.
#[derive(Debug, Clone)]
pub struct EulerianField {
    x: Vec<f64>,
    t: Vec<f64>,
    pub m: Vec<f64>,
    /// Zero outside the support.
    pub p: Vec<f64>,
    /// Zero outside the support.
    pub u_x: Vec<f64>,
    /// NaN outside the support.
    pub u: Vec<f64>,
    pub mask: Vec<bool>,
    /// `(x̄, j̄)` where `u = 0`.
    pub anchor: (f64, usize),
    /// Largest gap between the two path integrals of `u`.
    pub mixed_path: f64,
    window: (f64, f64),
    flow: FlowField,
    initial: InitialPressure,
    theta: f64,
    gy: Vec<Vec<f64>>,
    gt: Vec<Vec<f64>>,
}

/// `(Y, p, u_x)` at an Eulerian point of one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub y: f64,
    pub p: f64,
    pub u_x: f64,
}

impl EulerianField {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn flow(&self) -> &FlowField {
        &self.flow
    }

    pub fn idx(&self, k: usize, j: usize) -> usize {
        j * self.x.len() + k
    }

    pub fn left(&self, j: usize) -> f64 {
        self.flow.gamma(0, j)
    }

    pub fn right(&self, j: usize) -> f64 {
        self.flow.gamma(self.flow.mesh().ny() - 1, j)
    }

    /// Label `Y` with `γ(Y, t_j) = x`, if `x` lies in the support.
    pub fn invert(&self, x: f64, j: usize) -> Option<f64> {
        let g = self.flow.slice(j);
        let n = g.len();
        if !(x >= g[0] && x <= g[n - 1]) {
            return None;
        }
        let i = g.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
        let y = self.flow.mesh().y();
        let a = (x - g[i]) / (g[i + 1] - g[i]);
        Some(y[i] + a * (y[i + 1] - y[i]))
    }

    /// Point values by exact inversion; `None` outside the support.
    pub fn eval(&self, x: f64, j: usize) -> Option<PointValue> {
        let yv = self.invert(x, j)?;
        let y = self.flow.mesh().y();
        let n = y.len();
        let i = y.partition_point(|&v| v <= yv).saturating_sub(1).min(n - 2);
        let a = (yv - y[i]) / (y[i + 1] - y[i]);
        let lerp = |v: &[f64]| (1.0 - a) * v[i] + a * v[i + 1];
        let gy = lerp(&self.gy[j]);
        let gt = lerp(&self.gt[j]);
        Some(PointValue {
            y: yv,
            p: self.initial.value(yv).max(0.0) * gy.powf(-self.theta),
            u_x: -gt,
        })
    }

    /// Zero-extended pressure by exact inversion.
    pub fn pressure_at(&self, x: f64, j: usize) -> f64 {
        self.eval(x, j).map_or(0.0, |v| v.p)
    }

    /// Pressure linearly interpolated from the grid of slice `j`.
    pub fn grid_pressure(&self, x: f64, j: usize) -> f64 {
        let h = self.dx();
        let s = ((x - self.x[0]) / h).clamp(0.0, (self.nx() - 1) as f64);
        let k = (s.floor() as usize).min(self.nx() - 2);
        let a = s - k as f64;
        (1.0 - a) * self.p[self.idx(k, j)] + a * self.p[self.idx(k + 1, j)]
    }

    /// Inverse chart `Y(s, t_j)` of `s = γ(y, t_j) − γ_L(t_j)`.
    pub fn chart_y(&self, s: f64, j: usize) -> Option<f64> {
        self.invert(self.left(j) + s, j)
    }

    /// Boundary pressure chart `P(s, t_j) = p(γ_L(t_j) + s, t_j)`.
    pub fn chart_p(&self, s: f64, j: usize) -> f64 {
        self.pressure_at(self.left(j) + s, j)
    }

    /// Largest `|Y(γ(y_i, t)) − y_i|` over the nodes of the window.
    pub fn round_trip_error(&self) -> f64 {
        let y = self.flow.mesh().y();
        let mut worst: f64 = 0.0;
        for j in self.flow.mesh().window_indices(self.window) {
            for (i, &yi) in y.iter().enumerate() {
                let back = self.invert(self.flow.gamma(i, j), j).unwrap_or(f64::NAN);
                worst = worst.max((back - yi).abs());
            }
        }
        worst
    }
}

fn trapezoid_cumulative(xs: &[f64], fs: &[f64], start: usize) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    for k in start + 1..xs.len() {
        out[k] = out[k - 1] + 0.5 * (xs[k] - xs[k - 1]) * (fs[k] + fs[k - 1]);
    }
    for k in (0..start).rev() {
        out[k] = out[k + 1] - 0.5 * (xs[k + 1] - xs[k]) * (fs[k + 1] + fs[k]);
    }
    out
}

/// Reconstructs `m`, `p`, `u_x` and `u` on `nx` uniform points covering every
/// support slice with a margin.
pub fn eulerian_reconstruct(field: &FlowField, prob: &ProblemSpec, nx: usize) -> Result<EulerianField> {
    if nx < 8 {
        return Err(input(format!("eulerian grid needs at least 8 points, got {nx}")));
    }
    field.check_monotone()?;
    let mesh = field.mesh();
    let (nt, last) = (mesh.nt(), mesh.ny() - 1);
    let window = prob.window;
    let jw = mesh.window_indices(window);
    if jw.is_empty() {
        return Err(input("measurement window contains no time slice"));
    }
    let lo = (0..nt).map(|j| field.gamma(0, j)).fold(f64::INFINITY, f64::min);
    let hi = (0..nt).map(|j| field.gamma(last, j)).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo);
    let x: Vec<f64> = (0..nx)
        .map(|k| lo - pad + (hi - lo + 2.0 * pad) * k as f64 / (nx - 1) as f64)
        .collect();
    let theta = prob.theta();
    let mut ef = EulerianField {
        x,
        t: mesh.t().to_vec(),
        m: Vec::new(),
        p: Vec::new(),
        u_x: Vec::new(),
        u: Vec::new(),
        mask: Vec::new(),
        anchor: (0.0, 0),
        mixed_path: 0.0,
        window,
        flow: field.clone(),
        initial: prob.initial.clone(),
        theta,
        gy: (0..nt).map(|j| field.gamma_y_nodes(j)).collect(),
        gt: (0..nt).map(|j| field.gamma_t_nodes(j)).collect(),
    };
    if let Some((j, _)) = ef.gy.iter().enumerate().find(|(_, g)| g.iter().any(|&v| !(v > 0.0))) {
        return Err(Error::State(format!("nodal γ_y not positive on slice {j}; cannot invert")));
    }

    let slices: Vec<Vec<Option<PointValue>>> = (0..nt)
        .into_par_iter()
        .map(|j| ef.x.iter().map(|&x| ef.eval(x, j)).collect())
        .collect();
    for s in &slices {
        for v in s {
            ef.mask.push(v.is_some());
            let (p, ux) = v.map_or((0.0, 0.0), |v| (v.p, v.u_x));
            ef.p.push(p);
            ef.m.push(p.powf(1.0 / theta));
            ef.u_x.push(ux);
        }
    }

    // anchor deep inside the positive phase at the middle of the window
    let tmid = 0.5 * (window.0 + window.1);
    let jbar = *jw
        .iter()
        .min_by(|&&a, &&b| (ef.t[a] - tmid).abs().total_cmp(&(ef.t[b] - tmid).abs()))
        .unwrap();
    let xbar = 0.5 * (ef.left(jbar) + ef.right(jbar));
    ef.anchor = (xbar, jbar);

    // u along x = x̄ from u_t = ½u_x² − p
    let g_bar: Vec<f64> = (0..nt)
        .map(|j| ef.eval(xbar, j).map_or(f64::NAN, |v| 0.5 * v.u_x * v.u_x - v.p))
        .collect();
    let u_bar = trapezoid_cumulative(&ef.t, &g_bar, jbar);

    // then along each slice from u_x
    let nxg = ef.nx();
    let u_rows: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![f64::NAN; nxg];
            let Some(vb) = ef.eval(xbar, j) else { return row };
            let ks: Vec<usize> = (0..nxg).filter(|&k| slices[j][k].is_some()).collect();
            let mut xs = Vec::with_capacity(ks.len() + 1);
            let mut fs = Vec::with_capacity(ks.len() + 1);
            let split = ks.partition_point(|&k| ef.x[k] < xbar);
            for (n, &k) in ks.iter().enumerate() {
                if n == split {
                    xs.push(xbar);
                    fs.push(vb.u_x);
                }
                xs.push(ef.x[k]);
                fs.push(slices[j][k].unwrap().u_x);
            }
            if split == ks.len() {
                xs.push(xbar);
                fs.push(vb.u_x);
            }
            let cum = trapezoid_cumulative(&xs, &fs, split);
            for (n, &k) in ks.iter().enumerate() {
                let c = if n < split { cum[n] } else { cum[n + 1] };
                row[k] = u_bar[j] + c;
            }
            row
        })
        .collect();
    ef.u = u_rows.concat();

    // the other path: along the anchor slice in x, then in t at fixed x
    let mut mixed: f64 = 0.0;
    for k in (0..nxg).step_by(2) {
        let g: Vec<f64> = (0..nt)
            .map(|j| {
                let i = ef.idx(k, j);
                if ef.mask[i] {
                    0.5 * ef.u_x[i] * ef.u_x[i] - ef.p[i]
                } else {
                    f64::NAN
                }
            })
            .collect();
        let start = ef.u[ef.idx(k, jbar)];
        if !start.is_finite() {
            continue;
        }
        let alt = trapezoid_cumulative(&ef.t, &g, jbar);
        for &j in &jw {
            let (a, b) = (start + alt[j], ef.u[ef.idx(k, j)]);
            if a.is_finite() && b.is_finite() {
                mixed = mixed.max((a - b).abs());
            }
        }
    }
    ef.mixed_path = mixed;
    Ok(ef)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResiduals {
    pub hj: f64,
    pub continuity: f64,
    pub collar: usize,
    pub points: usize,
}

/// Sup norms over window slices of `−u_t + ½u_x² − m^θ` and `m_t − (m u_x)_x`
/// by centered differences.
///
/// With `collar > 0` a point counts only if every grid point within `collar`
/// cells in `x`, on the three slices of the stencil, lies in the support.
/// With `collar = 0` only the point itself must.
pub fn pde_residuals(ef: &EulerianField, coupling: &CouplingParams, collar: usize) -> PdeResiduals {
    let theta = coupling.theta();
    let (nx, nt) = (ef.nx(), ef.nt());
    let h = ef.dx();
    let t = ef.t();
    let mut out = PdeResiduals {
        hj: 0.0,
        continuity: 0.0,
        collar,
        points: 0,
    };
    let w = ef.flow.mesh().window_indices(ef.window);
    for j in w.into_iter().filter(|&j| j > 0 && j + 1 < nt) {
        let ht = t[j + 1] - t[j - 1];
        for k in 1..nx - 1 {
            let ok = if collar == 0 {
                ef.mask[ef.idx(k, j)]
            } else {
                let (a, b) = (k.saturating_sub(collar), (k + collar).min(nx - 1));
                (j - 1..=j + 1).all(|jj| (a..=b).all(|kk| ef.mask[ef.idx(kk, jj)]))
            };
            if !ok {
                continue;
            }
            out.points += 1;
            let i = ef.idx(k, j);
            let u_t = (ef.u[ef.idx(k, j + 1)] - ef.u[ef.idx(k, j - 1)]) / ht;
            let hj = -u_t + 0.5 * ef.u_x[i] * ef.u_x[i] - ef.m[i].powf(theta);
            if hj.is_finite() {
                out.hj = out.hj.max(hj.abs());
            }
            let m_t = (ef.m[ef.idx(k, j + 1)] - ef.m[ef.idx(k, j - 1)]) / ht;
            let flux = |kk: usize| ef.m[ef.idx(kk, j)] * ef.u_x[ef.idx(kk, j)];
            let c = m_t - (flux(k + 1) - flux(k - 1)) / (2.0 * h);
            out.continuity = out.continuity.max(c.abs());
        }
    }
    out
}

/// Difference quotients of zero-extended `p` at spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sharpness {
    pub h: f64,
    /// Largest `|p(x+h) − p(x)|/h` over points spanning the support with a margin.
    pub lipschitz_x: f64,
    /// Largest `|p(x, t_{j+1}) − p(x, t_j)|/Δt` on the same points.
    pub lipschitz_t: f64,
    /// Largest `|p(x_b+h) − 2p(x_b) + p(x_b−h)|/h²` at either boundary.
    pub second_difference: f64,
}

impl Sharpness {
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_x.max(self.lipschitz_t)
    }
}

pub fn sharpness(ef: &EulerianField, h: f64) -> Sharpness {
    let t = ef.t();
    let nt = ef.nt();
    let mut out = Sharpness {
        h,
        lipschitz_x: 0.0,
        lipschitz_t: 0.0,
        second_difference: 0.0,
    };
    for j in ef.flow.mesh().window_indices(ef.window) {
        let (l, r) = (ef.left(j), ef.right(j));
        let n = ((r - l) / h).ceil() as usize + 6;
        let xs: Vec<f64> = (0..=n).map(|k| l - 3.0 * h + k as f64 * h).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| ef.pressure_at(x, j)).collect();
        for w in ps.windows(2) {
            out.lipschitz_x = out.lipschitz_x.max((w[1] - w[0]).abs() / h);
        }
        if j + 1 < nt {
            let dt = t[j + 1] - t[j];
            for (&x, &p) in xs.iter().zip(&ps) {
                out.lipschitz_t = out.lipschitz_t.max((ef.pressure_at(x, j + 1) - p).abs() / dt);
            }
        }
        for xb in [l, r] {
            let d = ef.pressure_at(xb + h, j) - 2.0 * ef.pressure_at(xb, j) + ef.pressure_at(xb - h, j);
            out.second_difference = out.second_difference.max(d.abs() / (h * h));
        }
    }
    out
}

/// Largest gap over interior window slices between `u_x` extrapolated from
/// the first two interior nodes and the boundary velocity `−γ'` from a
/// centered time difference.
pub fn interface_jump(ef: &EulerianField) -> f64 {
    let flow = &ef.flow;
    let nt = flow.mesh().nt();
    let last = flow.mesh().ny() - 1;
    let mut worst: f64 = 0.0;
    for j in flow.mesh().window_indices(ef.window) {
        if j == 0 || j + 1 >= nt {
            continue;
        }
        let (vl, vr) = boundary_velocities(flow, j);
        for (edge, near, far, v) in [(0, 1, 2, vl), (last, last - 1, last - 2, vr)] {
            let (xb, x1, x2) = (flow.gamma(edge, j), flow.gamma(near, j), flow.gamma(far, j));
            let (u1, u2) = (-ef.gt[j][near], -ef.gt[j][far]);
            let ext = u1 + (u2 - u1) * (xb - x1) / (x2 - x1);
            worst = worst.max((ext + v).abs());
        }
    }
    worst
}
