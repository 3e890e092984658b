//! Residual and Jacobian of the discrete flow equation `γ_tt = p0'Z + c_θ p0 Z_y`.
//!
//! Row `(i, j)` sits at `j·ny + i`. Rows `j = 0` impose `γ = origin + y`; the
//! last slice carries the terminal condition; interior slices use the
//! centered second difference in `t` against the node operator
//! `S_i = Σ α_f Z_f` over neighbouring cells `f`.

use rayon::prelude::*;

use super::band::BandMatrix;
use super::field::FlowField;
use super::mesh::Mesh;
use crate::error::{domain, input, Result};
use crate::problem::{ProblemSpec, TerminalSpec};

#[derive(Debug, Clone, Copy)]
enum Terminal {
    Cost { c1: f64 },
    Planning,
}

/// Mesh- and problem-dependent coefficients, built once per solve.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    theta: f64,
    /// Cell widths.
    dy: Vec<f64>,
    /// Node operator: `S_i = Σ coeff · Z_face` over two cells.
    ops: Vec<[(usize, f64); 2]>,
    initial: Vec<f64>,
    target: Vec<f64>,
    terminal: Terminal,
}

impl Discretization {
    pub fn new(prob: &ProblemSpec, mesh: &Mesh) -> Result<Self> {
        let p = &prob.initial;
        let b = p.support_len();
        if (mesh.support_len() - b).abs() > 1e-12 * b {
            return Err(input(format!(
                "mesh covers [0, {}] but the initial support is [0, {b}]",
                mesh.support_len()
            )));
        }
        if (mesh.horizon() - prob.horizon).abs() > 1e-12 * prob.horizon {
            return Err(input("mesh horizon differs from the problem horizon"));
        }
        let (sl, sr) = (p.slope_left(), p.slope_right());
        if !(sl.is_finite() && sl > 0.0 && sr.is_finite() && sr < 0.0) {
            return Err(domain(format!(
                "endpoint slopes p0'(0+) = {sl}, p0'(b-) = {sr} must be finite with p0'(0+) > 0 > p0'(b-)"
            )));
        }
        let c_theta = prob.coupling.c_theta();
        let y = mesh.y();
        let ny = y.len();
        let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        let mut ops = Vec::with_capacity(ny);
        let e0 = dy[0] / (dy[0] + dy[1]);
        ops.push([(0, sl * (1.0 + e0)), (1, -sl * e0)]);
        for i in 1..ny - 1 {
            let (hl, hr) = (dy[i - 1], dy[i]);
            let half = 0.5 * (hl + hr);
            let (wl, wr) = (hr / (hl + hr), hl / (hl + hr));
            let (d1, v) = (p.d1(y[i]), p.value(y[i]));
            ops.push([
                (i - 1, d1 * wl - c_theta * v / half),
                (i, d1 * wr + c_theta * v / half),
            ]);
        }
        let en = dy[ny - 2] / (dy[ny - 2] + dy[ny - 3]);
        ops.push([(ny - 2, sr * (1.0 + en)), (ny - 3, -sr * en)]);

        let initial = y.iter().map(|&v| prob.origin + v).collect();
        let (terminal, target) = match &prob.terminal {
            TerminalSpec::Cost { c1 } => (Terminal::Cost { c1: *c1 }, Vec::new()),
            TerminalSpec::Planning { .. } => {
                let map = prob.terminal_map()?.expect("planning problems have a terminal map");
                let target: Vec<f64> = y.iter().map(|&v| map.eval(v)).collect();
                if target.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(input("terminal transport map is not strictly increasing"));
                }
                (Terminal::Planning, target)
            }
        };
        Ok(Discretization {
            mesh: mesh.clone(),
            theta: prob.theta(),
            dy,
            ops,
            initial,
            target,
            terminal,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Terminal Dirichlet values (planning problems only).
    pub fn target(&self) -> Option<&[f64]> {
        match self.terminal {
            Terminal::Planning => Some(&self.target),
            Terminal::Cost { .. } => None,
        }
    }

    /// Linear-in-time blend of the initial and terminal slices (planning), or
    /// the initial slice held constant (terminal cost).
    pub fn initial_guess(&self) -> FlowField {
        let t_end = self.mesh.horizon();
        let ny = self.mesh.ny();
        let mut gamma = Vec::with_capacity(self.mesh.len());
        for &t in self.mesh.t() {
            let s = t / t_end;
            for i in 0..ny {
                let g = match self.terminal {
                    Terminal::Planning => (1.0 - s) * self.initial[i] + s * self.target[i],
                    Terminal::Cost { .. } => self.initial[i],
                };
                gamma.push(g);
            }
        }
        FlowField::new(self.mesh.clone(), gamma).expect("sizes agree")
    }

    fn slopes(&self, g: &[f64]) -> Vec<f64> {
        g.windows(2).zip(&self.dy).map(|(w, h)| (w[1] - w[0]) / h).collect()
    }

    fn node_operator(&self, z: &[f64], i: usize) -> f64 {
        let [(fa, ca), (fb, cb)] = self.ops[i];
        ca * z[fa] + cb * z[fb]
    }

    fn slice_residual(&self, gamma: &[f64], j: usize, out: &mut [f64]) {
        let ny = self.mesh.ny();
        let nt = self.mesh.nt();
        let dt = self.mesh.dt();
        let g = |jj: usize| &gamma[jj * ny..(jj + 1) * ny];
        if j == 0 {
            for i in 0..ny {
                out[i] = g(0)[i] - self.initial[i];
            }
            return;
        }
        if j == nt - 1 {
            if let Terminal::Planning = self.terminal {
                for i in 0..ny {
                    out[i] = g(j)[i] - self.target[i];
                }
                return;
            }
        }
        let z: Vec<f64> = self
            .slopes(g(j))
            .into_iter()
            .map(|q| q.powf(-(self.theta + 1.0)))
            .collect();
        match self.terminal {
            Terminal::Cost { c1 } if j == nt - 1 => {
                for i in 0..ny {
                    let s = self.node_operator(&z, i);
                    out[i] = (g(j)[i] - g(j - 1)[i]) / dt + (0.5 * dt + c1) * s;
                }
            }
            _ => {
                let dt2 = dt * dt;
                for i in 0..ny {
                    let s = self.node_operator(&z, i);
                    out[i] = (g(j + 1)[i] - 2.0 * g(j)[i] + g(j - 1)[i]) / dt2 - s;
                }
            }
        }
    }

    /// Residual without the monotonicity precheck (NaN where slopes are not positive).
    pub(crate) fn residual_unchecked(&self, gamma: &[f64]) -> Vec<f64> {
        let ny = self.mesh.ny();
        let mut r = vec![0.0; gamma.len()];
        r.par_chunks_mut(ny)
            .enumerate()
            .for_each(|(j, out)| self.slice_residual(gamma, j, out));
        r
    }

    pub fn residual(&self, field: &FlowField) -> Result<Vec<f64>> {
        field.check_monotone()?;
        Ok(self.residual_unchecked(field.values()))
    }

    /// Entries `(row, col, value)` of the Jacobian rows of slice `j`.
    fn slice_jacobian(&self, gamma: &[f64], j: usize) -> Vec<(usize, usize, f64)> {
        let ny = self.mesh.ny();
        let nt = self.mesh.nt();
        let dt = self.mesh.dt();
        let row = |i: usize| j * ny + i;
        let mut out = Vec::with_capacity(5 * ny);
        let planning_end = j == nt - 1 && matches!(self.terminal, Terminal::Planning);
        if j == 0 || planning_end {
            for i in 0..ny {
                out.push((row(i), row(i), 1.0));
            }
            return out;
        }
        let gj = &gamma[j * ny..(j + 1) * ny];
        // dZ_f/dγ_{f+1} = −dZ_f/dγ_f
        let dz: Vec<f64> = self
            .slopes(gj)
            .iter()
            .zip(&self.dy)
            .map(|(q, h)| -(self.theta + 1.0) * q.powf(-(self.theta + 2.0)) / h)
            .collect();
        let (time_coeffs, s_scale): (Vec<(usize, f64)>, f64) = match self.terminal {
            Terminal::Cost { c1 } if j == nt - 1 => {
                (vec![(j, 1.0 / dt), (j - 1, -1.0 / dt)], 0.5 * dt + c1)
            }
            _ => {
                let dt2 = dt * dt;
                (vec![(j + 1, 1.0 / dt2), (j, -2.0 / dt2), (j - 1, 1.0 / dt2)], -1.0)
            }
        };
        for i in 0..ny {
            for &(jj, c) in &time_coeffs {
                out.push((row(i), jj * ny + i, c));
            }
            for &(f, a) in &self.ops[i] {
                let v = s_scale * a * dz[f];
                out.push((row(i), row(f + 1), v));
                out.push((row(i), row(f), -v));
            }
        }
        out
    }

    pub(crate) fn jacobian_unchecked(&self, gamma: &[f64]) -> BandMatrix {
        let ny = self.mesh.ny();
        let nt = self.mesh.nt();
        let entries: Vec<Vec<(usize, usize, f64)>> = (0..nt)
            .into_par_iter()
            .map(|j| self.slice_jacobian(gamma, j))
            .collect();
        let mut jac = BandMatrix::zeros(self.mesh.len(), ny, ny);
        for slice in entries {
            for (r, c, v) in slice {
                jac.add(r, c, v);
            }
        }
        jac
    }

    pub fn jacobian(&self, field: &FlowField) -> Result<BandMatrix> {
        field.check_monotone()?;
        Ok(self.jacobian_unchecked(field.values()))
    }
}

/// Residual of the discrete flow equation with initial and terminal rows.
pub fn assemble_residual(field: &FlowField, prob: &ProblemSpec) -> Result<Vec<f64>> {
    field.check_monotone()?;
    Discretization::new(prob, field.mesh())?.residual(field)
}

/// Residual rows of the last time slice.
pub fn apply_terminal_condition(field: &FlowField, prob: &ProblemSpec) -> Result<Vec<f64>> {
    let r = assemble_residual(field, prob)?;
    let ny = field.mesh().ny();
    Ok(r[r.len() - ny..].to_vec())
}

/// Analytic Jacobian of [`assemble_residual`], banded with one y-row of bandwidth.
pub fn assemble_jacobian(field: &FlowField, prob: &ProblemSpec) -> Result<BandMatrix> {
    field.check_monotone()?;
    Discretization::new(prob, field.mesh())?.jacobian(field)
}
