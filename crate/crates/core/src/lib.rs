//! One-dimensional first-order mean field games with power coupling, solved
//! in Lagrangian coordinates, with free-boundary regularity diagnostics.

pub mod analysis;
pub mod error;
pub mod lagrangian;
pub mod oracle;
pub mod problem;
pub mod quad;
pub mod transforms;

pub use error::{Error, Result};
