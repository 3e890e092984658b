//! Fixed-order quadrature helpers shared by the mass, transport and weak-form code.

use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of a Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn legendre(n: usize) -> Self {
        let rule = GaussLegendre::new(n).expect("degree >= 2");
        let (nodes, weights) = rule.into_iter().unzip();
        Rule { nodes, weights }
    }

    /// Integral of `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        half * acc
    }

    /// Mapped nodes and weights on [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Cached 16-point rule used for composite integration.
pub fn gl16() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::legendre(16))
}

/// Cached 4-point rule used cell-by-cell on piecewise-smooth data.
pub fn gl4() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::legendre(4))
}

/// Composite 16-point Gauss–Legendre over `panels` equal panels.
pub fn composite(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gl16();
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// Integral over [lo, hi] of a function with algebraic endpoint behaviour.
///
/// Uses x = mid - half·cos(φ), which turns power-law vanishing at both ends
/// into smooth-enough integrands in φ.
pub fn endpoint_graded(lo: f64, hi: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    composite(0.0, PI, panels, |phi| f(mid - half * phi.cos()) * half * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = gl16().integrate(0.0, 2.0, |x| x.powi(7));
        assert!((v - 2f64.powi(8) / 8.0).abs() < 1e-12);
        let v = gl4().integrate(-1.0, 3.0, |x| x.powi(3) - x);
        assert!((v - (81.0 / 4.0 - 9.0 / 2.0 - 0.25 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn graded_handles_sqrt_endpoints() {
        // ∫_0^1 sqrt(x(1-x)) dx = π/8
        let v = endpoint_graded(0.0, 1.0, 32, |x| (x * (1.0 - x)).max(0.0).sqrt());
        assert!((v - PI / 8.0).abs() < 1e-12);
    }
}
