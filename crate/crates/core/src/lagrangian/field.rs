use super::mesh::{derivative_weights, locate, Mesh};
use crate::error::{input, Error, Result};

/// Discrete Lagrangian map `γ(y_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    mesh: Mesh,
    gamma: Vec<f64>,
}

impl FlowField {
    pub fn new(mesh: Mesh, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != mesh.len() {
            return Err(input(format!(
                "flow field has {} values for a mesh of {} nodes",
                gamma.len(),
                mesh.len()
            )));
        }
        Ok(FlowField { mesh, gamma })
    }

    pub fn from_fn(mesh: Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut gamma = Vec::with_capacity(mesh.len());
        for &t in mesh.t() {
            for &y in mesh.y() {
                gamma.push(f(y, t));
            }
        }
        FlowField { mesh, gamma }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[self.mesh.idx(i, j)]
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let ny = self.mesh.ny();
        &self.gamma[j * ny..(j + 1) * ny]
    }

    /// Difference quotients on the cells of slice `j`.
    pub fn face_slopes(&self, j: usize) -> Vec<f64> {
        let y = self.mesh.y();
        self.slice(j)
            .windows(2)
            .zip(y.windows(2))
            .map(|(g, yy)| (g[1] - g[0]) / (yy[1] - yy[0]))
            .collect()
    }

    /// `Z = γ_y^{−(θ+1)}` on the cells of slice `j`.
    pub fn z_faces(&self, j: usize, theta: f64) -> Vec<f64> {
        self.face_slopes(j).into_iter().map(|q| q.powf(-(theta + 1.0))).collect()
    }

    /// Second-order nodal `γ_y` (one-sided at the endpoints).
    pub fn gamma_y_nodes(&self, j: usize) -> Vec<f64> {
        let y = self.mesh.y();
        let g = self.slice(j);
        (0..y.len())
            .map(|i| derivative_weights(y, i).iter().map(|&(k, w)| w * g[k]).sum())
            .collect()
    }

    /// Second-order nodal `γ_t` (one-sided at the first and last slices).
    pub fn gamma_t_nodes(&self, j: usize) -> Vec<f64> {
        let t = self.mesh.t();
        let w = derivative_weights(t, j);
        (0..self.mesh.ny())
            .map(|i| w.iter().map(|&(k, c)| c * self.gamma(i, k)).sum())
            .collect()
    }

    /// Smallest and largest cell slope over the whole mesh.
    pub fn slope_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..self.mesh.nt() {
            for q in self.face_slopes(j) {
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        (lo, hi)
    }

    /// Location and value of the smallest cell slope.
    pub fn worst_cell(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, f64::INFINITY);
        for j in 0..self.mesh.nt() {
            for (i, q) in self.face_slopes(j).into_iter().enumerate() {
                if !(q >= worst.2) {
                    worst = (i, j, q);
                }
            }
        }
        worst
    }

    /// Errors unless every time slice is strictly increasing in `y`.
    pub fn check_monotone(&self) -> Result<()> {
        let (i, j, q) = self.worst_cell();
        if q > 0.0 {
            Ok(())
        } else {
            Err(Error::State(format!(
                "flow not monotone: cell [{i}, {}] at time index {j} has slope {q:e}",
                i + 1
            )))
        }
    }

    /// Piecewise-bilinear evaluation at `(y, t)` (clamped to the mesh).
    pub fn interpolate(&self, y: f64, t: f64) -> f64 {
        let (ys, ts) = (self.mesh.y(), self.mesh.t());
        let i = locate(ys, y);
        let j = locate(ts, t);
        let a = ((y - ys[i]) / (ys[i + 1] - ys[i])).clamp(0.0, 1.0);
        let b = ((t - ts[j]) / (ts[j + 1] - ts[j])).clamp(0.0, 1.0);
        let g = |ii, jj| self.gamma(ii, jj);
        (1.0 - b) * ((1.0 - a) * g(i, j) + a * g(i + 1, j))
            + b * ((1.0 - a) * g(i, j + 1) + a * g(i + 1, j + 1))
    }

    /// Piecewise-linear transfer onto another mesh over the same domain.
    pub fn prolong(&self, target: &Mesh) -> FlowField {
        FlowField::from_fn(target.clone(), |y, t| self.interpolate(y, t))
    }

    /// Sup-norm distance to another field on the same mesh.
    pub fn max_abs_diff(&self, other: &FlowField) -> f64 {
        self.gamma
            .iter()
            .zip(&other.gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::Grading;

    #[test]
    fn identity_field_derivatives() {
        let mesh = Mesh::new(2.0, 17, 1.0, 17, Grading::SqrtGraded).unwrap();
        let f = FlowField::from_fn(mesh, |y, _| y);
        for j in [0, 8, 16] {
            assert!(f.z_faces(j, 1.5).iter().all(|z| (z - 1.0).abs() < 1e-13));
            assert!(f.gamma_y_nodes(j).iter().all(|g| (g - 1.0).abs() < 1e-12));
            assert!(f.gamma_t_nodes(j).iter().all(|g| g.abs() < 1e-12));
        }
        assert!(f.check_monotone().is_ok());
        assert_eq!(f.slope_bounds().0.min(1.0), f.slope_bounds().0);
    }

    #[test]
    fn fold_is_located() {
        let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::Uniform).unwrap();
        let f = FlowField::from_fn(mesh.clone(), |y, _| y);
        let k = mesh.idx(5, 9);
        let mut v = f.values().to_vec();
        v[k] = v[k + 1] + 0.01;
        let f = FlowField::new(mesh, v).unwrap();
        let err = f.check_monotone().unwrap_err().to_string();
        assert!(err.contains("cell [5, 6]") && err.contains("time index 9"), "{err}");
    }

    #[test]
    fn prolongation_is_exact_for_bilinear() {
        let coarse = Mesh::new(1.0, 17, 2.0, 17, Grading::Uniform).unwrap();
        let fine = coarse.refined().unwrap();
        let f = FlowField::from_fn(coarse, |y, t| 1.0 + 2.0 * y - t + 0.5 * y * t);
        let g = f.prolong(&fine);
        let exact = FlowField::from_fn(fine, |y, t| 1.0 + 2.0 * y - t + 0.5 * y * t);
        assert!(g.max_abs_diff(&exact) < 1e-13);
    }
}
