//! Aggregated regularity diagnostics of one solved field.

use serde::Serialize;

use super::curves::{acceleration_residual, free_boundary_curves, mass_relation_residual, AccelerationResidual, CurveRow};
use super::eulerian::{
    eulerian_reconstruct, interface_jump, pde_residuals, sharpness, EulerianField, PdeResiduals, Sharpness, COLLAR,
};
use super::rates::{dyadic_offsets, holder_exponent, RateFit, RateTarget};
use crate::error::Result;
use crate::lagrangian::FlowField;
use crate::oracle::SelfSimilarSolution;
use crate::problem::ProblemSpec;
use crate::transforms::{build_radial_chart, CHART_NODES};

/// Eulerian resolution of the rate fits, as a fraction of the support width.
pub const RATE_RESOLUTION: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Number of window times at which the pressure rate is fitted.
    pub pressure_times: usize,
    /// Eulerian grid size; defaults to `2(ny − 1) + 1`.
    pub nx: Option<usize>,
    /// Chart radius bounding the fit distances; unbounded when `None`.
    pub rho: Option<f64>,
    pub collar: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            pressure_times: 5,
            nx: None,
            rho: None,
            collar: COLLAR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRate {
    pub t: f64,
    pub side: Side,
    pub fit: RateFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveDimension {
    pub expected: f64,
    pub fitted: f64,
    pub rel_error: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub theta: f64,
    pub window: (f64, f64),
    pub curves: Vec<CurveRow>,
    pub acceleration: AccelerationResidual,
    pub mass_relation: f64,
    pub pde: PdeResiduals,
    pub pde_without_collar: PdeResiduals,
    pub pressure_rates: Vec<BoundaryRate>,
    pub value_gradient: Option<RateFit>,
    pub effective_dimension: Option<EffectiveDimension>,
    pub sharpness: Sharpness,
    pub interface_jump: f64,
    pub mixed_path: f64,
    pub round_trip: f64,
    /// Set when `p0''` came from a smoothed difference.
    pub smoothed_second_derivative: bool,
}

/// Pressure vanishing rate at a boundary of slice `j`.
pub fn pressure_rate(ef: &EulerianField, j: usize, side: Side, rho: Option<f64>) -> Result<RateFit> {
    let width = ef.right(j) - ef.left(j);
    let h = width / RATE_RESOLUTION;
    let hi = (width / 8.0).min(rho.unwrap_or(f64::INFINITY));
    let samples: Vec<(f64, f64)> = dyadic_offsets(4.0 * h, hi)
        .into_iter()
        .map(|s| {
            let x = match side {
                Side::Left => ef.left(j) + s,
                Side::Right => ef.right(j) - s,
            };
            (s, ef.pressure_at(x, j))
        })
        .collect();
    Ok(holder_exponent(&samples)?.with_target(RateTarget::new(1.0, 0.1)))
}

/// `|u_x(x* + d, t) − u_x(x*, t)|` against `d` on the exterior side of the right edge.
pub fn value_gradient_rate(oracle: &SelfSimilarSolution, t: f64, rho: Option<f64>) -> Result<RateFit> {
    let xs = oracle.half_width(t);
    let width = 2.0 * xs;
    let h = width / RATE_RESOLUTION;
    let hi = (width / 8.0).min(rho.unwrap_or(f64::INFINITY));
    let edge = oracle.value_dx(xs, t)?;
    let samples = dyadic_offsets(4.0 * h, hi)
        .into_iter()
        .map(|d| Ok((d, (oracle.value_dx(xs + d, t)? - edge).abs())))
        .collect::<Result<Vec<_>>>()?;
    Ok(holder_exponent(&samples)?.with_target(RateTarget::new(0.5, 0.1)))
}

/// Fitted log-log slope of the chart weight on `[r0/100, r0/10]` against `N − 1`.
pub fn effective_dimension(prob: &ProblemSpec, r0: f64) -> Result<EffectiveDimension> {
    let chart = build_radial_chart(&prob.initial, &prob.coupling, r0, CHART_NODES)?;
    let (lo, hi) = (r0 / 100.0, r0 / 10.0);
    let expected = chart.effective_dim() - 1.0;
    let fitted = chart.weight_slope(lo, hi, 64);
    Ok(EffectiveDimension {
        expected,
        fitted,
        rel_error: (fitted - expected).abs() / expected,
        lo,
        hi,
    })
}

fn spread(indices: &[usize], count: usize) -> Vec<usize> {
    if indices.len() <= count || count < 2 {
        return indices.iter().copied().take(count.max(1)).collect();
    }
    (0..count)
        .map(|k| indices[k * (indices.len() - 1) / (count - 1)])
        .collect()
}

pub fn regularity_report(field: &FlowField, prob: &ProblemSpec, opts: &ReportOptions) -> Result<RegularityReport> {
    let mesh = field.mesh();
    let nx = opts.nx.unwrap_or(2 * (mesh.ny() - 1) + 1);
    let ef = eulerian_reconstruct(field, prob, nx)?;
    let curves = free_boundary_curves(field, prob.window);
    let acceleration = acceleration_residual(field, prob);
    let mass_relation = mass_relation_residual(field, prob, |x, j| ef.grid_pressure(x, j));
    let pde = pde_residuals(&ef, &prob.coupling, opts.collar);
    let pde_without_collar = pde_residuals(&ef, &prob.coupling, 0);

    let jw = mesh.window_indices(prob.window);
    let mut pressure_rates = Vec::new();
    for j in spread(&jw, opts.pressure_times) {
        for side in [Side::Left, Side::Right] {
            pressure_rates.push(BoundaryRate {
                t: mesh.t()[j],
                side,
                fit: pressure_rate(&ef, j, side, opts.rho)?,
            });
        }
    }

    let tmid = 0.5 * (prob.window.0 + prob.window.1);
    let value_gradient = match SelfSimilarSolution::recognize(prob) {
        Some((oracle, t0)) => Some(value_gradient_rate(&oracle, t0 + tmid, opts.rho)?),
        None => None,
    };
    // largest radius inside the admissible chart
    let effective_dimension = effective_dimension(prob, prob.support_len().sqrt()).ok();

    let jbar = ef.anchor.1;
    let h = (ef.right(jbar) - ef.left(jbar)) / (mesh.ny() - 1) as f64;
    Ok(RegularityReport {
        theta: prob.theta(),
        window: prob.window,
        curves,
        acceleration,
        mass_relation,
        pde,
        pde_without_collar,
        pressure_rates,
        value_gradient,
        effective_dimension,
        sharpness: sharpness(&ef, h),
        interface_jump: interface_jump(&ef),
        mixed_path: ef.mixed_path,
        round_trip: ef.round_trip_error(),
        smoothed_second_derivative: prob.initial.d2(0.0).is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{Grading, Mesh};

    #[test]
    fn oracle_report() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        let prob = s.planning_problem(1.0, 2.0, (0.125, 0.875)).unwrap();
        let mesh = Mesh::new(prob.support_len(), 65, 1.0, 65, Grading::Uniform).unwrap();
        let f = s.sample_flow(1.0, &mesh).unwrap();
        let rep = regularity_report(&f, &prob, &ReportOptions::default()).unwrap();
        assert_eq!(rep.pressure_rates.len(), 10);
        for r in &rep.pressure_rates {
            assert!(r.fit.passes(), "{r:?}");
        }
        let vg = rep.value_gradient.as_ref().unwrap();
        assert!(vg.passes(), "{vg:?}");
        let ed = rep.effective_dimension.unwrap();
        assert!(ed.rel_error < 0.01, "{ed:?}");
        assert!(rep.mass_relation < 0.05);
        assert!(rep.interface_jump < 1e-3);
        assert!(!rep.smoothed_second_derivative);
    }

    #[test]
    fn spread_picks_evenly() {
        assert_eq!(spread(&[3, 4, 5, 6, 7, 8, 9, 10, 11], 5), vec![3, 5, 7, 9, 11]);
        assert_eq!(spread(&[1, 2], 5), vec![1, 2]);
    }
}
