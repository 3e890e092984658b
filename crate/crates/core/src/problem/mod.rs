//! Problem instances: coupling, initial pressure, terminal data and horizon.

mod coupling;
mod pressure;
mod profile;
mod transport;

pub use coupling::{derive_constants, CouplingParams};
pub use pressure::{
    validate_initial_pressure, HypothesisBounds, HypothesisCheck, InitialPressure, Smoothness,
    ValidationReport, MASS_TOL, VALIDATION_POINTS,
};
pub use profile::{AnalyticProfile, Profile, TabulatedProfile};
pub use transport::{monotone_transport_map, Density, TransportMap, MASS_MATCH_TOL};

use crate::error::{input, Result};

/// A pressure profile placed in Eulerian space with its left endpoint at `origin`.
#[derive(Debug, Clone)]
pub struct PlacedPressure {
    pub pressure: InitialPressure,
    pub origin: f64,
}

impl PlacedPressure {
    pub fn density(&self, theta: f64) -> Result<Density> {
        let p = self.pressure.clone();
        let lo = self.origin;
        Density::new(lo, lo + p.support_len(), move |x| p.density(theta, x - lo))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.origin, self.origin + self.pressure.support_len())
    }
}

#[derive(Debug, Clone)]
pub enum TerminalSpec {
    /// `u(·,T) = c1·m(·,T)^θ`.
    Cost { c1: f64 },
    /// Prescribed terminal density `m_T = p_T^{1/θ}`.
    Planning { target: PlacedPressure },
}

impl TerminalSpec {
    pub fn cost(c1: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 >= 0.0) {
            return Err(input(format!("terminal cost weight must be nonnegative, got {c1}")));
        }
        Ok(TerminalSpec::Cost { c1 })
    }

    pub fn planning(target: InitialPressure, origin: f64) -> Self {
        TerminalSpec::Planning {
            target: PlacedPressure {
                pressure: target,
                origin,
            },
        }
    }
}

/// Full input of a solve.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub coupling: CouplingParams,
    pub initial: InitialPressure,
    /// Eulerian position of the left endpoint of the initial support.
    pub origin: f64,
    pub terminal: TerminalSpec,
    pub horizon: f64,
    /// Closed measurement window strictly inside `(0, horizon)`.
    pub window: (f64, f64),
}

impl ProblemSpec {
    pub fn new(
        coupling: CouplingParams,
        initial: InitialPressure,
        terminal: TerminalSpec,
        horizon: f64,
        window: (f64, f64),
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(input(format!("horizon must be positive, got {horizon}")));
        }
        let (lo, hi) = window;
        if !(0.0 < lo && lo < hi && hi < horizon) {
            return Err(input(format!(
                "measurement window [{lo}, {hi}] must lie strictly inside (0, {horizon})"
            )));
        }
        if let TerminalSpec::Cost { c1 } = terminal {
            TerminalSpec::cost(c1)?;
        }
        Ok(ProblemSpec {
            coupling,
            initial,
            origin: 0.0,
            terminal,
            horizon,
            window,
        })
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    pub fn theta(&self) -> f64 {
        self.coupling.theta()
    }

    pub fn support_len(&self) -> f64 {
        self.initial.support_len()
    }

    pub fn initial_placed(&self) -> PlacedPressure {
        PlacedPressure {
            pressure: self.initial.clone(),
            origin: self.origin,
        }
    }

    /// Terminal Dirichlet map for planning problems.
    pub fn terminal_map(&self) -> Result<Option<TransportMap>> {
        match &self.terminal {
            TerminalSpec::Cost { .. } => Ok(None),
            TerminalSpec::Planning { target } => {
                let m0 = self.initial_placed().density(self.theta())?;
                let mt = target.density(self.theta())?;
                monotone_transport_map(&m0, &mt).map(Some)
            }
        }
    }

    /// Same problem translated by `d` in space.
    pub fn translated(&self, d: f64) -> Self {
        let mut out = self.clone();
        out.origin += d;
        if let TerminalSpec::Planning { target } = &mut out.terminal {
            target.origin += d;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ProblemSpec {
        let c = CouplingParams::new(1.0).unwrap();
        let p = InitialPressure::new(Profile::bump(1.0, 1.0).unwrap());
        ProblemSpec::new(c, p, TerminalSpec::cost(0.0).unwrap(), 1.0, (0.2, 0.8)).unwrap()
    }

    #[test]
    fn window_must_be_interior() {
        let s = sample();
        for w in [(0.0, 0.5), (0.5, 1.0), (0.6, 0.4), (0.2, 1.5)] {
            assert!(ProblemSpec::new(s.coupling, s.initial.clone(), s.terminal.clone(), 1.0, w).is_err());
        }
        assert!(TerminalSpec::cost(-1.0).is_err());
    }

    #[test]
    fn planning_shift_map_is_translation() {
        let s = sample();
        let target = s.initial.clone();
        let p = ProblemSpec {
            terminal: TerminalSpec::planning(target, 0.4),
            ..s
        };
        let map = p.terminal_map().unwrap().unwrap();
        for k in 0..=10 {
            let y = k as f64 / 10.0;
            assert!((map.eval(y) - (y + 0.4)).abs() < 1e-10);
        }
        let moved = p.translated(2.0);
        let map2 = moved.terminal_map().unwrap().unwrap();
        assert!((map2.eval(0.3) - map.eval(0.3) - 2.0).abs() < 1e-10);
    }
}
