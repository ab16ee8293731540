//! Finite-volume simulation and verification for scalar conservation laws
//! under an obstacle and a unit-mass constraint.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compat;
pub mod convergence;
pub mod error;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod verify;

pub use error::{OclError, Result};
pub use mesh::{compensated_sum, fmt_f64, Field, Grid1D, TimeSeries};
pub use model::{FluxKind, FluxSpec, InitialData, Obstacle, ObstacleSpec, ProblemSpec};
pub use solver::{SolverConfig, Splitting, Trajectory};
