//! Simulation and verification kernels for two-dimensional nematic
//! liquid-crystal flow with time-dependent boundary data.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod lifting;
pub mod linsolve;
pub mod majorant;
pub mod steady;

pub use diagnostics::{EnergyRecord, RateModel};
pub use dynamics::{Forcing, PhysParams, SimState};
pub use error::{Error, Result};
pub use grid::{BoundaryTrace, Grid, ScalarField2D, VectorField2D};
pub use harness::{RunManifest, Scenario};
pub use linsolve::{LinearSolver, SolverConfig, SolverMethod};
pub use steady::Equilibrium;
