//! Free-boundary curves and the Lagrangian identities along them.

use serde::Serialize;

use crate::lagrangian::FlowField;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub left: f64,
    pub right: f64,
    /// Centered first difference; `None` outside the window or at the ends.
    pub left_d: Option<f64>,
    pub right_d: Option<f64>,
    /// Centered second difference; `None` outside the window or at the ends.
    pub left_dd: Option<f64>,
    pub right_dd: Option<f64>,
}

/// Centered second difference of `g` at index `j` on a possibly nonuniform grid.
fn second_difference(t: &[f64], g: impl Fn(usize) -> f64, j: usize) -> f64 {
    let (h0, h1) = (t[j] - t[j - 1], t[j + 1] - t[j]);
    2.0 * (h0 * g(j + 1) - (h0 + h1) * g(j) + h1 * g(j - 1)) / (h0 * h1 * (h0 + h1))
}

fn first_difference(t: &[f64], g: impl Fn(usize) -> f64, j: usize) -> f64 {
    (g(j + 1) - g(j - 1)) / (t[j + 1] - t[j - 1])
}

fn interior_window(field: &FlowField, window: (f64, f64)) -> Vec<usize> {
    let nt = field.mesh().nt();
    field
        .mesh()
        .window_indices(window)
        .into_iter()
        .filter(|&j| j > 0 && j + 1 < nt)
        .collect()
}

/// `γ_L(t) = γ(0,t)`, `γ_R(t) = γ(b,t)` on every slice, with second
/// differences on the window only.
pub fn free_boundary_curves(field: &FlowField, window: (f64, f64)) -> Vec<CurveRow> {
    let mesh = field.mesh();
    let t = mesh.t();
    let last = mesh.ny() - 1;
    let inside = interior_window(field, window);
    (0..mesh.nt())
        .map(|j| {
            let dd = inside.contains(&j);
            CurveRow {
                t: t[j],
                left: field.gamma(0, j),
                right: field.gamma(last, j),
                left_d: dd.then(|| first_difference(t, |k| field.gamma(0, k), j)),
                right_d: dd.then(|| first_difference(t, |k| field.gamma(last, k), j)),
                left_dd: dd.then(|| second_difference(t, |k| field.gamma(0, k), j)),
                right_dd: dd.then(|| second_difference(t, |k| field.gamma(last, k), j)),
            }
        })
        .collect()
}

/// Centered `γ_L'`, `γ_R'` at interior slice `j`.
pub fn boundary_velocities(field: &FlowField, j: usize) -> (f64, f64) {
    let t = field.mesh().t();
    let last = field.mesh().ny() - 1;
    (
        first_difference(t, |k| field.gamma(0, k), j),
        first_difference(t, |k| field.gamma(last, k), j),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccelerationResidual {
    pub left: f64,
    pub right: f64,
}

impl AccelerationResidual {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

/// Sup over the window of `|γ_L'' − p0'(0⁺) γ_y(0,·)^{−(θ+1)}|` and the
/// right analogue with `p0'(b⁻)`.
pub fn acceleration_residual(field: &FlowField, prob: &ProblemSpec) -> AccelerationResidual {
    let e = -(prob.theta() + 1.0);
    let (sl, sr) = (prob.initial.slope_left(), prob.initial.slope_right());
    let t = field.mesh().t();
    let last = field.mesh().ny() - 1;
    let mut out = AccelerationResidual { left: 0.0, right: 0.0 };
    for j in interior_window(field, prob.window) {
        let gy = field.gamma_y_nodes(j);
        let l = second_difference(t, |k| field.gamma(0, k), j) - sl * gy[0].powf(e);
        let r = second_difference(t, |k| field.gamma(last, k), j) - sr * gy[last].powf(e);
        out.left = out.left.max(l.abs());
        out.right = out.right.max(r.abs());
    }
    out
}

/// Sup over mesh nodes in the window of `|p0(y) − p(γ(y,t),t) γ_y^θ|`, with
/// `pressure(x, j)` the Eulerian pressure on slice `j`.
pub fn mass_relation_residual(
    field: &FlowField,
    prob: &ProblemSpec,
    pressure: impl Fn(f64, usize) -> f64,
) -> f64 {
    let theta = prob.theta();
    let y = field.mesh().y();
    let mut worst: f64 = 0.0;
    for j in field.mesh().window_indices(prob.window) {
        let gy = field.gamma_y_nodes(j);
        for (i, &yi) in y.iter().enumerate() {
            let r = prob.initial.value(yi) - pressure(field.gamma(i, j), j) * gy[i].powf(theta);
            worst = worst.max(r.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{Grading, Mesh};
    use crate::oracle::SelfSimilarSolution;

    #[test]
    fn identity_curves_are_constant() {
        let mesh = Mesh::new(2.0, 17, 1.0, 17, Grading::Uniform).unwrap();
        let f = FlowField::from_fn(mesh, |y, _| y - 0.5);
        let rows = free_boundary_curves(&f, (0.25, 0.75));
        assert_eq!(rows.len(), 17);
        for r in &rows {
            assert_eq!((r.left, r.right), (-0.5, 1.5));
            if let Some(d) = r.left_dd {
                assert!(d.abs() < 1e-12 && r.right_dd.unwrap().abs() < 1e-12);
            }
        }
        assert_eq!(rows.iter().filter(|r| r.left_dd.is_some()).count(), 9);
    }

    #[test]
    fn oracle_curves_are_convex_toward_the_positive_phase() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        let prob = s.planning_problem(1.0, 2.0, (0.125, 0.875)).unwrap();
        let mesh = Mesh::new(prob.support_len(), 17, 1.0, 65, Grading::Uniform).unwrap();
        let f = s.sample_flow(1.0, &mesh).unwrap();
        for r in free_boundary_curves(&f, prob.window) {
            let Some(rd) = r.right_dd else { continue };
            let t = 1.0 + r.t;
            // γ_R = 3 t^{2/3}, γ_R'' = −(2/3) t^{−4/3}
            assert!((r.right - 3.0 * t.powf(2.0 / 3.0)).abs() < 1e-12);
            assert!((rd + 2.0 / 3.0 * t.powf(-4.0 / 3.0)).abs() < 1e-4);
            assert!(r.left_dd.unwrap() > 0.0 && rd < 0.0);
        }
        let acc = acceleration_residual(&f, &prob);
        assert!(acc.max() < 1e-4, "{acc:?}");
    }

    #[test]
    fn mass_relation_detects_a_scaled_pressure() {
        let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
        let prob = s.planning_problem(1.0, 2.0, (0.125, 0.875)).unwrap();
        let mesh = Mesh::new(prob.support_len(), 33, 1.0, 17, Grading::Uniform).unwrap();
        let f = s.sample_flow(1.0, &mesh).unwrap();
        let t = mesh.t().to_vec();
        let exact = |x: f64, j: usize| s.pressure(x, 1.0 + t[j]).unwrap();
        assert!(mass_relation_residual(&f, &prob, exact) < 1e-13);
        let bad = mass_relation_residual(&f, &prob, |x, j| 1.01 * exact(x, j));
        let max_p0 = prob.initial.value(0.5 * prob.support_len());
        assert!((bad - 0.01 * max_p0).abs() < 1e-3 * max_p0, "{bad}");
    }
}
