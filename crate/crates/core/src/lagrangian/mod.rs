//! Space-time discretization of the Lagrangian flow equation and its Newton solver.

mod assemble;
mod band;
mod field;
mod mesh;
mod newton;

pub use assemble::{apply_terminal_condition, assemble_jacobian, assemble_residual, Discretization};
pub use band::{BandLu, BandMatrix};
pub use field::FlowField;
pub use mesh::{Grading, Mesh, MIN_NODES};
pub use newton::{
    continuation_solve, initial_guess, newton_solve, ConvergenceTrace, Damping, IterationRecord,
    SolverConfig,
};

pub(crate) use mesh::{derivative_weights, locate};
