use serde::{Deserialize, Serialize};

use super::assemble::Discretization;
use super::field::FlowField;
use super::mesh::Mesh;
use crate::error::{input, Error, Result};
use crate::problem::ProblemSpec;

/// Backtracking schedule: try `initial`, multiply by `ratio` until accepted or below `min_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub initial: f64,
    pub ratio: f64,
    pub min_step: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Damping {
            initial: 1.0,
            ratio: 0.5,
            min_step: 1.0 / 1048576.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target for the ∞-norm of the residual.
    pub newton_tol: f64,
    pub max_iters: usize,
    pub damping: Damping,
    /// Smallest cell slope an accepted iterate may have.
    pub barrier_floor: f64,
    pub continuation_levels: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-9,
            max_iters: 30,
            damping: Damping::default(),
            barrier_floor: 1e-6,
            continuation_levels: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(input("newton_tol must be positive"));
        }
        if !(self.barrier_floor > 0.0) {
            return Err(input("barrier_floor must be positive"));
        }
        let d = self.damping;
        if !(d.initial > 0.0 && d.initial <= 1.0 && d.ratio > 0.0 && d.ratio < 1.0 && d.min_step > 0.0) {
            return Err(input("damping needs 0 < initial <= 1, 0 < ratio < 1, min_step > 0"));
        }
        if self.continuation_levels == 0 {
            return Err(input("continuation_levels must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub level: usize,
    /// 0 for the initial guess.
    pub iteration: usize,
    pub residual: f64,
    /// Accepted step fraction (0 for the initial guess).
    pub step: f64,
    pub min_slope: f64,
    pub max_slope: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
}

impl ConvergenceTrace {
    /// Number of Newton steps taken.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.iteration > 0).count()
    }

    pub fn last_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn extend(&mut self, other: ConvergenceTrace) {
        self.records.extend(other.records);
    }
}

fn sup_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

fn slope_range(mesh: &Mesh, g: &[f64]) -> (f64, f64) {
    let ny = mesh.ny();
    let y = mesh.y();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for slice in g.chunks(ny) {
        for (i, w) in slice.windows(2).enumerate() {
            let q = (w[1] - w[0]) / (y[i + 1] - y[i]);
            if !(q >= lo) {
                lo = q;
            }
            hi = hi.max(q);
        }
    }
    (lo, hi)
}

fn solve_level(
    prob: &ProblemSpec,
    cfg: &SolverConfig,
    disc: &Discretization,
    guess: FlowField,
    level: usize,
) -> Result<(FlowField, ConvergenceTrace)> {
    cfg.validate()?;
    guess.check_monotone()?;
    let _ = prob;
    let mesh = guess.mesh().clone();
    let mut gamma = guess.values().to_vec();
    let mut r = disc.residual_unchecked(&gamma);
    let mut norm = sup_norm(&r);
    let mut trace = ConvergenceTrace::default();
    let (lo, hi) = slope_range(&mesh, &gamma);
    trace.records.push(IterationRecord {
        level,
        iteration: 0,
        residual: norm,
        step: 0.0,
        min_slope: lo,
        max_slope: hi,
    });
    let field = |g: &[f64]| Box::new(FlowField::new(mesh.clone(), g.to_vec()).expect("sizes agree"));
    for iteration in 1..=cfg.max_iters {
        if norm <= cfg.newton_tol {
            break;
        }
        let lu = match disc.jacobian_unchecked(&gamma).factor() {
            Ok(lu) => lu,
            Err(e) => {
                return Err(Error::Step {
                    iteration,
                    reason: e.to_string(),
                    trace,
                    last: field(&gamma),
                })
            }
        };
        let mut dx: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve(&mut dx);
        let mut step = cfg.damping.initial;
        let accepted = loop {
            let trial: Vec<f64> = gamma.iter().zip(&dx).map(|(g, d)| g + step * d).collect();
            let (lo, hi) = slope_range(&mesh, &trial);
            if lo >= cfg.barrier_floor && hi.is_finite() {
                let rt = disc.residual_unchecked(&trial);
                let nt = sup_norm(&rt);
                if nt < norm || nt <= cfg.newton_tol {
                    break Some((trial, rt, nt, lo, hi));
                }
            }
            step *= cfg.damping.ratio;
            if step < cfg.damping.min_step {
                break None;
            }
        };
        let Some((trial, rt, nt, lo, hi)) = accepted else {
            return Err(Error::Step {
                iteration,
                reason: format!(
                    "no step fraction above {:e} keeps slopes >= {:e} and reduces the residual {:.3e}",
                    cfg.damping.min_step, cfg.barrier_floor, norm
                ),
                trace,
                last: field(&gamma),
            });
        };
        gamma = trial;
        r = rt;
        norm = nt;
        trace.records.push(IterationRecord {
            level,
            iteration,
            residual: norm,
            step,
            min_slope: lo,
            max_slope: hi,
        });
    }
    if norm <= cfg.newton_tol {
        Ok((*field(&gamma), trace))
    } else {
        Err(Error::NonConvergence {
            trace,
            last: field(&gamma),
        })
    }
}

/// Damped Newton iteration from `initial_guess`.
pub fn newton_solve(
    prob: &ProblemSpec,
    cfg: &SolverConfig,
    initial_guess: FlowField,
) -> Result<(FlowField, ConvergenceTrace)> {
    let disc = Discretization::new(prob, initial_guess.mesh())?;
    solve_level(prob, cfg, &disc, initial_guess, 1)
}

/// Default starting field for `mesh`.
pub fn initial_guess(prob: &ProblemSpec, mesh: &Mesh) -> Result<FlowField> {
    Ok(Discretization::new(prob, mesh)?.initial_guess())
}

/// Solves on successively refined meshes ending at `finest`, prolonging each
/// solution as the next starting field. Level 1 is the coarsest.
pub fn continuation_solve(
    prob: &ProblemSpec,
    cfg: &SolverConfig,
    finest: &Mesh,
) -> Result<(FlowField, ConvergenceTrace)> {
    cfg.validate()?;
    let mut meshes = vec![finest.clone()];
    for _ in 1..cfg.continuation_levels {
        let coarser = meshes.last().unwrap().coarsened().map_err(|e| {
            input(format!(
                "cannot build {} continuation levels below {}x{}: {e}",
                cfg.continuation_levels,
                finest.ny(),
                finest.nt()
            ))
        })?;
        meshes.push(coarser);
    }
    meshes.reverse();
    let mut trace = ConvergenceTrace::default();
    let mut current: Option<FlowField> = None;
    for (k, mesh) in meshes.iter().enumerate() {
        let level = k + 1;
        let wrap = |e: Error| Error::Level {
            level,
            source: Box::new(e),
        };
        let disc = Discretization::new(prob, mesh).map_err(wrap)?;
        let guess = match current.take() {
            None => disc.initial_guess(),
            Some(prev) => prev.prolong(mesh),
        };
        let (solved, t) = solve_level(prob, cfg, &disc, guess, level).map_err(|e| match e {
            Error::NonConvergence { trace: t, last } => {
                let mut all = trace.clone();
                all.extend(t);
                wrap(Error::NonConvergence { trace: all, last })
            }
            Error::Step {
                iteration,
                reason,
                trace: t,
                last,
            } => {
                let mut all = trace.clone();
                all.extend(t);
                wrap(Error::Step {
                    iteration,
                    reason,
                    trace: all,
                    last,
                })
            }
            other => wrap(other),
        })?;
        trace.extend(t);
        current = Some(solved);
    }
    Ok((current.expect("at least one level"), trace))
}
