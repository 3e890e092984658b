//! Free-boundary extraction, Eulerian reconstruction, identity residuals
//! and rate fits.

mod convergence;
mod curves;
mod eulerian;
mod rates;
mod report;

pub use convergence::{convergence_study, level_errors, ConvergenceTable, LevelErrors, Norms, Orders};
pub use curves::{
    acceleration_residual, boundary_velocities, free_boundary_curves, mass_relation_residual, AccelerationResidual,
    CurveRow,
};
pub use eulerian::{
    eulerian_reconstruct, interface_jump, pde_residuals, sharpness, EulerianField, PdeResiduals, PointValue,
    Sharpness, COLLAR,
};
pub use rates::{dyadic_offsets, holder_exponent, RateFit, RateTarget, MIN_OFFSETS, R2_FLOOR};
pub use report::{
    effective_dimension, pressure_rate, regularity_report, value_gradient_rate, BoundaryRate, EffectiveDimension,
    RegularityReport, ReportOptions, Side, RATE_RESOLUTION,
};
