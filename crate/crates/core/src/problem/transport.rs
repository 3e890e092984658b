//! Monotone rearrangement between two compactly supported densities.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{input, Result};
use crate::quad;

const PANELS: usize = 256;

/// A nonnegative density on `[lo, hi]`, vanishing outside.
#[derive(Clone)]
pub struct Density {
    lo: f64,
    hi: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Density").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

impl Density {
    pub fn new(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(input(format!("density support [{lo}, {hi}] is empty")));
        }
        Ok(Density { lo, hi, f: Arc::new(f) })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            0.0
        } else {
            (self.f)(x)
        }
    }

    /// The same density translated by `d`.
    pub fn shifted(&self, d: f64) -> Self {
        let f = self.f.clone();
        Density {
            lo: self.lo + d,
            hi: self.hi + d,
            f: Arc::new(move |x| f(x - d)),
        }
    }
}

/// Cumulative mass in the angle variable `x = mid − half·cos φ`.
#[derive(Debug, Clone)]
struct Cumulative {
    density: Density,
    /// Mass accumulated at the start of each panel (len PANELS + 1).
    table: Vec<f64>,
}

impl Cumulative {
    fn new(density: Density) -> Self {
        let mut table = Vec::with_capacity(PANELS + 1);
        table.push(0.0);
        let dphi = PI / PANELS as f64;
        let mut acc = 0.0;
        for k in 0..PANELS {
            acc += Self::panel(&density, k as f64 * dphi, (k + 1) as f64 * dphi);
            table.push(acc);
        }
        Cumulative { density, table }
    }

    fn mid_half(&self) -> (f64, f64) {
        (0.5 * (self.density.lo + self.density.hi), 0.5 * (self.density.hi - self.density.lo))
    }

    fn panel(density: &Density, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (density.lo + density.hi);
        let half = 0.5 * (density.hi - density.lo);
        quad::gl16().integrate(a, b, |phi| density.eval(mid - half * phi.cos()) * half * phi.sin())
    }

    fn total(&self) -> f64 {
        self.table[PANELS]
    }

    fn angle(&self, x: f64) -> f64 {
        let (mid, half) = self.mid_half();
        ((mid - x) / half).clamp(-1.0, 1.0).acos()
    }

    /// Mass on `[lo, x]`.
    fn cdf_angle(&self, phi: f64) -> f64 {
        let dphi = PI / PANELS as f64;
        let k = ((phi / dphi).floor() as usize).min(PANELS - 1);
        let start = k as f64 * dphi;
        self.table[k] + Self::panel(&self.density, start, phi)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.cdf_angle(self.angle(x))
    }

    /// Point where the cumulative mass reaches `target`.
    fn quantile(&self, target: f64) -> f64 {
        let (mid, half) = self.mid_half();
        if target <= 0.0 {
            return self.density.lo;
        }
        if target >= self.total() {
            return self.density.hi;
        }
        let dphi = PI / PANELS as f64;
        // panel containing the target
        let k = self.table.partition_point(|&m| m <= target).saturating_sub(1).min(PANELS - 1);
        let (mut a, mut b) = (k as f64 * dphi, (k + 1) as f64 * dphi);
        let mut phi = 0.5 * (a + b);
        for _ in 0..100 {
            let g = self.cdf_angle(phi) - target;
            if g.abs() <= 1e-15 * self.total() {
                break;
            }
            if g > 0.0 {
                b = phi;
            } else {
                a = phi;
            }
            let dens = self.density.eval(mid - half * phi.cos()) * half * phi.sin();
            let newton = if dens > 0.0 { phi - g / dens } else { f64::NAN };
            phi = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a < 1e-15 {
                break;
            }
        }
        mid - half * phi.cos()
    }
}

/// The increasing map `γ_T` equating cumulative masses of `m0` and `mT`.
///
/// The argument is the Lagrangian coordinate `y = x − lo_0`; the value is an
/// Eulerian position in the support of `mT`.
#[derive(Debug, Clone)]
pub struct TransportMap {
    source: Cumulative,
    target: Cumulative,
}

/// Relative mismatch of total masses accepted by [`monotone_transport_map`].
pub const MASS_MATCH_TOL: f64 = 1e-6;

pub fn monotone_transport_map(m0: &Density, mt: &Density) -> Result<TransportMap> {
    let source = Cumulative::new(m0.clone());
    let target = Cumulative::new(mt.clone());
    let (a, b) = (source.total(), target.total());
    if !(a > 0.0 && b > 0.0) {
        return Err(input("transport map: densities must have positive mass"));
    }
    if (a - b).abs() > MASS_MATCH_TOL * a.max(b) {
        return Err(input(format!("transport map: mass mismatch {a} vs {b}")));
    }
    Ok(TransportMap { source, target })
}

impl TransportMap {
    pub fn eval(&self, y: f64) -> f64 {
        let x = self.source.density.lo + y;
        let frac = self.source.cdf(x) / self.source.total();
        self.target.quantile(frac * self.target.total())
    }

    /// Length of the source support (the Lagrangian interval).
    pub fn source_len(&self) -> f64 {
        self.source.density.hi - self.source.density.lo
    }

    pub fn target_support(&self) -> (f64, f64) {
        self.target.density.support()
    }

    /// The map of the swapped pair.
    pub fn inverse(&self) -> TransportMap {
        TransportMap {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    pub fn source_mass(&self) -> f64 {
        self.source.total()
    }

    pub fn target_mass(&self) -> f64 {
        self.target.total()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semicircle(lo: f64, hi: f64) -> Density {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        Density::new(lo, hi, move |x| (r * r - (x - c) * (x - c)).max(0.0).sqrt()).unwrap()
    }

    #[test]
    fn equal_densities_give_identity() {
        let m = Density::new(0.0, 2.0, |x| x * (2.0 - x)).unwrap();
        let map = monotone_transport_map(&m, &m).unwrap();
        for k in 0..=20 {
            let y = 0.1 * k as f64;
            assert!((map.eval(y) - y).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn translation_gives_shift() {
        let m = semicircle(0.0, 1.0);
        let map = monotone_transport_map(&m, &m.shifted(0.7)).unwrap();
        for k in 0..=10 {
            let y = 0.1 * k as f64;
            assert!((map.eval(y) - (y + 0.7)).abs() < 1e-10);
        }
        assert!((map.eval(0.0) - 0.7).abs() < 1e-12);
        assert!((map.eval(1.0) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let a = Density::new(0.0, 1.0, |_| 1.0).unwrap();
        let b = Density::new(0.0, 1.0, |_| 1.1).unwrap();
        assert!(monotone_transport_map(&a, &b).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let a = Density::new(0.0, 1.0, |x| 6.0 * x * (1.0 - x)).unwrap();
        let b = Density::new(-1.0, 2.0, |x| {
            let s = (x + 1.0) / 3.0;
            (std::f64::consts::PI * s).sin() * std::f64::consts::PI / 6.0
        })
        .unwrap();
        let fwd = monotone_transport_map(&a, &b).unwrap();
        let back = fwd.inverse();
        for k in 0..=50 {
            let y = k as f64 / 50.0;
            let x = fwd.eval(y);
            let y_back = back.eval(x + 1.0);
            assert!((y_back - y).abs() < 1e-10, "y={y} back={y_back}");
        }
    }
}
