//! Time integration of the penalized viscous problem.
//!
//! Each step splits into an explicit transport-diffusion stage and a
//! cellwise implicit reaction stage. In the reaction stage the multiplier
//! `lambda = n int (u - theta)^+` is solved together with the new state, so
//! that the total mass is preserved to round-off.

mod config;
mod io;
mod picard;
mod run;
mod scheme;

pub use config::{SolverConfig, Splitting};
pub use io::{write_diagnostics_csv, write_snapshots_csv, DIAGNOSTICS_HEADER, SNAPSHOT_HEADER};
pub use picard::{
    contraction_horizon, estimate_contraction, picard_iterate, standard_seeds, sup_l1_gap,
    PicardReport, PICARD_RADIUS,
};
pub use run::{
    run, solve_homogeneous, solve_homogeneous_with, uniform_times, Diagnostics, RunStats, Snapshot,
    Trajectory,
};
pub use scheme::{compute_lambda, numerical_flux, stable_dt, step, SolverState};
