//! Errors against the self-similar solution under mesh refinement.

use serde::Serialize;

use crate::error::{input, Result};
use crate::lagrangian::{continuation_solve, ConvergenceTrace, FlowField, Mesh, SolverConfig};
use crate::oracle::SelfSimilarSolution;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub linf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelErrors {
    pub ny: usize,
    pub nt: usize,
    pub gamma: Norms,
    /// `γ` error relative to `sup |γ|`.
    pub gamma_rel: f64,
    pub pressure: Norms,
    pub velocity: Norms,
    pub newton_iterations: usize,
}

/// `log₂(e_k / e_{k+1})` for each error between consecutive levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orders {
    pub gamma_linf: f64,
    pub gamma_l2: f64,
    pub pressure_linf: f64,
    pub pressure_l2: f64,
    pub velocity_linf: f64,
    pub velocity_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub theta: f64,
    pub levels: Vec<LevelErrors>,
    pub orders: Vec<Orders>,
}

fn order(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

/// Trapezoid weights of a grid.
fn weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

/// Errors of a field against the exact flow with base time `t0`.
pub fn level_errors(field: &FlowField, oracle: &SelfSimilarSolution, t0: f64, p0: impl Fn(f64) -> f64) -> LevelErrors {
    let mesh = field.mesh();
    let theta = oracle.theta();
    let w0 = oracle.half_width(t0);
    let (wy, wt) = (weights(mesh.y()), weights(mesh.t()));
    let mut acc = [[0.0f64; 2]; 3];
    let mut scale: f64 = 0.0;
    for (j, &tau) in mesh.t().iter().enumerate() {
        let t = t0 + tau;
        let stretch = (t / t0).powf(oracle.nu());
        let gy = field.gamma_y_nodes(j);
        let gt = field.gamma_t_nodes(j);
        for (i, &y) in mesh.y().iter().enumerate() {
            let base = (y - w0) / t0.powf(oracle.nu());
            let exact_g = (y - w0) * stretch;
            let exact_p = oracle.pressure(exact_g, t).unwrap_or(0.0);
            let exact_v = oracle.flow_dt(base, t);
            let errs = [
                field.gamma(i, j) - exact_g,
                p0(y) * gy[i].powf(-theta) - exact_p,
                gt[i] - exact_v,
            ];
            for (a, e) in acc.iter_mut().zip(errs) {
                a[0] = a[0].max(e.abs());
                a[1] += wy[i] * wt[j] * e * e;
            }
            scale = scale.max(exact_g.abs());
        }
    }
    let norms = |a: [f64; 2]| Norms {
        linf: a[0],
        l2: a[1].sqrt(),
    };
    LevelErrors {
        ny: mesh.ny(),
        nt: mesh.nt(),
        gamma: norms(acc[0]),
        gamma_rel: acc[0][0] / scale,
        pressure: norms(acc[1]),
        velocity: norms(acc[2]),
        newton_iterations: 0,
    }
}

/// Solves `prob` on each mesh and tabulates errors against the exact solution.
///
/// `prob` must be a self-similar planning pair; meshes are expected to be
/// successive refinements so that the orders are log₂ ratios.
pub fn convergence_study(prob: &ProblemSpec, cfg: &SolverConfig, meshes: &[Mesh]) -> Result<ConvergenceTable> {
    let Some((oracle, t0)) = SelfSimilarSolution::recognize(prob) else {
        return Err(input("convergence study needs a self-similar planning problem"));
    };
    if meshes.is_empty() {
        return Err(input("convergence study needs at least one mesh"));
    }
    let mut levels = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let (field, trace): (FlowField, ConvergenceTrace) = continuation_solve(prob, cfg, mesh)?;
        let mut e = level_errors(&field, &oracle, t0, |y| prob.initial.value(y));
        e.newton_iterations = trace.iterations();
        levels.push(e);
    }
    let orders = levels
        .windows(2)
        .map(|w| Orders {
            gamma_linf: order(w[0].gamma.linf, w[1].gamma.linf),
            gamma_l2: order(w[0].gamma.l2, w[1].gamma.l2),
            pressure_linf: order(w[0].pressure.linf, w[1].pressure.linf),
            pressure_l2: order(w[0].pressure.l2, w[1].pressure.l2),
            velocity_linf: order(w[0].velocity.linf, w[1].velocity.linf),
            velocity_l2: order(w[0].velocity.l2, w[1].velocity.l2),
        })
        .collect();
    Ok(ConvergenceTable {
        theta: prob.theta(),
        levels,
        orders,
    })
}
