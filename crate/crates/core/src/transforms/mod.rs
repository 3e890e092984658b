//! `Z` and `V = Z_y` fields, the square-root radial chart, the weighted weak
//! residual near the axis, and the Volterra solution of the regular-singular ODE.

mod chart;
mod fields;
mod volterra;
mod weak;

pub use chart::{build_radial_chart, ChartBounds, RadialChart, CHART_NODES};
pub use fields::{compute_v, compute_z, NodeField};
pub use volterra::{mu_integrating_factor, shoot, volterra_solve, RegularSingularODE, VOLTERRA_NODES};
pub use weak::{weighted_weak_residual, RadialSolution, TestFunction, TestShape};
