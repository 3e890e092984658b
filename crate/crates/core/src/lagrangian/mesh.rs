use serde::Serialize;

use crate::error::{input, Result};

/// Minimum number of nodes per axis.
pub const MIN_NODES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Grading {
    Uniform,
    /// Uniform in `r = 2√y` on the outer quarter of the support at each end,
    /// uniform in `y` in between; the map is C¹ across the junctions.
    SqrtGraded,
}

/// Tensor mesh on `[0, b] × [0, T]`, uniform in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    y: Vec<f64>,
    t: Vec<f64>,
    grading: Grading,
}

fn graded_node(b: f64, s: f64) -> f64 {
    // s ∈ [0, 1]; first and last thirds of s map quadratically onto b/4.
    if s <= 1.0 / 3.0 {
        0.25 * b * (3.0 * s).powi(2)
    } else if s >= 2.0 / 3.0 {
        b - 0.25 * b * (3.0 * (1.0 - s)).powi(2)
    } else {
        0.25 * b + 1.5 * b * (s - 1.0 / 3.0)
    }
}

impl Mesh {
    pub fn new(b: f64, ny: usize, horizon: f64, nt: usize, grading: Grading) -> Result<Self> {
        if !(b > 0.0 && horizon > 0.0) {
            return Err(input("mesh extents must be positive"));
        }
        if ny < MIN_NODES || nt < MIN_NODES {
            return Err(input(format!("mesh needs at least {MIN_NODES} nodes per axis, got {ny}x{nt}")));
        }
        let y = (0..ny)
            .map(|i| {
                let s = i as f64 / (ny - 1) as f64;
                match grading {
                    Grading::Uniform => b * s,
                    Grading::SqrtGraded => graded_node(b, s),
                }
            })
            .collect::<Vec<_>>();
        let t = (0..nt).map(|j| horizon * j as f64 / (nt - 1) as f64).collect();
        let mut mesh = Mesh { y, t, grading };
        mesh.y[ny - 1] = b;
        mesh.t[nt - 1] = horizon;
        Ok(mesh)
    }

    pub fn from_nodes(y: Vec<f64>, t: Vec<f64>, grading: Grading) -> Result<Self> {
        if y.len() < MIN_NODES || t.len() < MIN_NODES {
            return Err(input(format!("mesh needs at least {MIN_NODES} nodes per axis")));
        }
        if y[0] != 0.0 || t[0] != 0.0 {
            return Err(input("mesh axes must start at 0"));
        }
        for axis in [&y, &t] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(input("mesh nodes must be strictly increasing"));
            }
        }
        let dt = t[1] - t[0];
        if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-10 * dt) {
            return Err(input("time nodes must be uniform"));
        }
        Ok(Mesh { y, t, grading })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn len(&self) -> usize {
        self.ny() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn support_len(&self) -> f64 {
        *self.y.last().unwrap()
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Flat index of node `(i, j)`; time-major so one time slice is contiguous.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ny() + i
    }

    /// Largest spacing in `y`.
    pub fn max_dy(&self) -> f64 {
        self.y.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Mesh with every cell halved.
    pub fn refined(&self) -> Result<Mesh> {
        Mesh::new(
            self.support_len(),
            2 * self.ny() - 1,
            self.horizon(),
            2 * self.nt() - 1,
            self.grading,
        )
    }

    /// Mesh with every other node removed, if that keeps enough nodes.
    pub fn coarsened(&self) -> Result<Mesh> {
        if self.ny() % 2 == 0 || self.nt() % 2 == 0 {
            return Err(input("only meshes with an odd node count can be coarsened"));
        }
        Mesh::new(
            self.support_len(),
            self.ny() / 2 + 1,
            self.horizon(),
            self.nt() / 2 + 1,
            self.grading,
        )
    }

    /// Time indices whose nodes lie in the closed window.
    pub fn window_indices(&self, window: (f64, f64)) -> Vec<usize> {
        let tol = 1e-12 * self.horizon();
        (0..self.nt())
            .filter(|&j| self.t[j] >= window.0 - tol && self.t[j] <= window.1 + tol)
            .collect()
    }

    /// Cell `k` with `y[k] <= v <= y[k+1]` (clamped).
    pub fn locate_y(&self, v: f64) -> usize {
        locate(&self.y, v)
    }
}

pub(crate) fn locate(nodes: &[f64], v: f64) -> usize {
    let n = nodes.len();
    nodes.partition_point(|&x| x <= v).saturating_sub(1).min(n - 2)
}

/// Second-order first-derivative weights at node `i` on a nonuniform grid.
pub(crate) fn derivative_weights(x: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = x.len();
    if i == 0 {
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        [
            (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (1, (h1 + h2) / (h1 * h2)),
            (2, -h1 / (h2 * (h1 + h2))),
        ]
    } else if i == n - 1 {
        let (h1, h2) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
        [
            (n - 1, (2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (n - 2, -(h1 + h2) / (h1 * h2)),
            (n - 3, h1 / (h2 * (h1 + h2))),
        ]
    } else {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        [
            (i - 1, -h2 / (h1 * (h1 + h2))),
            (i, (h2 - h1) / (h1 * h2)),
            (i + 1, h1 / (h2 * (h1 + h2))),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_mesh_is_sqrt_near_ends() {
        let m = Mesh::new(4.0, 61, 1.0, 17, Grading::SqrtGraded).unwrap();
        let y = m.y();
        assert_eq!(y[0], 0.0);
        assert_eq!(y[60], 4.0);
        // first third: y = (b/4) r² with uniform r
        for i in 0..=20 {
            let r = i as f64 / 20.0;
            assert!((y[i] - r * r).abs() < 1e-12);
        }
        assert!((y[30] - 2.0).abs() < 1e-12);
        // C¹ junction: neighbouring spacings agree to first order
        let left = y[20] - y[19];
        let right = y[21] - y[20];
        assert!((left - right).abs() / right < 0.1);
    }

    #[test]
    fn rejects_small_meshes() {
        assert!(Mesh::new(1.0, 16, 1.0, 17, Grading::Uniform).is_err());
        assert!(Mesh::new(1.0, 17, 1.0, 9, Grading::Uniform).is_err());
    }

    #[test]
    fn refine_and_coarsen_nest() {
        let m = Mesh::new(2.0, 17, 1.0, 17, Grading::SqrtGraded).unwrap();
        let f = m.refined().unwrap();
        assert_eq!(f.ny(), 33);
        for i in 0..17 {
            assert!((f.y()[2 * i] - m.y()[i]).abs() < 1e-14);
        }
        assert_eq!(f.coarsened().unwrap(), m);
    }

    #[test]
    fn derivative_weights_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.35, 0.5, 0.9];
        let f = |v: f64| 3.0 * v * v - v + 2.0;
        for i in 0..x.len() {
            let d: f64 = derivative_weights(&x, i).iter().map(|&(k, w)| w * f(x[k])).sum();
            assert!((d - (6.0 * x[i] - 1.0)).abs() < 1e-12, "i={i}");
        }
    }
}
