use crate::lagrangian::{derivative_weights, FlowField, Mesh};
use crate::problem::CouplingParams;

/// Scalar values on the nodes of a [`Mesh`], time-major like [`FlowField`].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    mesh: Mesh,
    values: Vec<f64>,
}

impl NodeField {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Self {
        assert_eq!(mesh.len(), values.len(), "node field size mismatch");
        NodeField { mesh, values }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.idx(i, j)]
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let ny = self.mesh.ny();
        &self.values[j * ny..(j + 1) * ny]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Nodal `Z = γ_y^{−(θ+1)}` from second-order nodal `γ_y`.
pub fn compute_z(field: &FlowField, coupling: &CouplingParams) -> NodeField {
    let e = -(coupling.theta() + 1.0);
    let mesh = field.mesh();
    let mut values = Vec::with_capacity(mesh.len());
    for j in 0..mesh.nt() {
        values.extend(field.gamma_y_nodes(j).into_iter().map(|g| g.powf(e)));
    }
    NodeField::new(mesh.clone(), values)
}

/// `V = Z_y` by centered differences of nodal `Z`, one-sided at the endpoints.
pub fn compute_v(field: &FlowField, coupling: &CouplingParams) -> NodeField {
    let z = compute_z(field, coupling);
    let mesh = field.mesh();
    let y = mesh.y();
    let mut values = Vec::with_capacity(mesh.len());
    for j in 0..mesh.nt() {
        let zs = z.slice(j);
        values.extend(
            (0..y.len()).map(|i| derivative_weights(y, i).iter().map(|&(k, w)| w * zs[k]).sum::<f64>()),
        );
    }
    NodeField::new(mesh.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::Grading;

    #[test]
    fn identity_gives_unit_z() {
        let c = CouplingParams::new(2.0).unwrap();
        let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::SqrtGraded).unwrap();
        let f = FlowField::from_fn(mesh, |y, _| y);
        assert!(compute_z(&f, &c).values().iter().all(|z| (z - 1.0).abs() < 1e-12));
        assert!(compute_v(&f, &c).values().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn quadratic_perturbation() {
        let c = CouplingParams::new(1.0).unwrap();
        let eps = 1e-4;
        let mesh = Mesh::new(1.0, 33, 1.0, 17, Grading::Uniform).unwrap();
        let f = FlowField::from_fn(mesh.clone(), |y, _| y + eps * y * y);
        let z = compute_z(&f, &c);
        let v = compute_v(&f, &c);
        for (i, &y) in mesh.y().iter().enumerate() {
            // Z = (1 + 2εy)^{-2} ≈ 1 − 4εy
            assert!((z.get(i, 4) - (1.0 - 4.0 * eps * y)).abs() < 2e-7);
            assert!((z.get(i, 4) - (1.0 + 2.0 * eps * y).powi(-2)).abs() < 1e-13);
            assert!((v.get(i, 4) + 4.0 * eps * (1.0 + 2.0 * eps * y).powi(-3)).abs() < 1e-10);
        }
    }
}
