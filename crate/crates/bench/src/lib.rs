//! Shared fixtures for the benchmarks.

use ocl_core::model::padded_domain;
use ocl_core::solver::{run, uniform_times};
use ocl_core::{
    Field, FluxSpec, Grid1D, InitialData, ObstacleSpec, ProblemSpec, SolverConfig, Trajectory,
};

/// Burgers flux, a unit-mass bump and a dip travelling through it.
pub fn reference_problem() -> ProblemSpec {
    ProblemSpec::new(
        FluxSpec::burgers(4.0).expect("valid flux"),
        ObstacleSpec::MovingDip {
            floor: 0.15,
            depth: 1.0,
            center: -3.5,
            speed: 0.8,
            width: 1.5,
        },
        InitialData::Bump {
            center: 0.0,
            half_width: 2.5,
        },
    )
    .expect("valid problem")
}

pub fn reference_grid(dx: f64) -> Grid1D {
    let (a, b) = padded_domain((-2.5, 2.5), 0.6, 3.5, 0.1);
    Grid1D::with_spacing(a, b, dx).expect("valid grid")
}

pub fn reference_datum(grid: &Grid1D) -> Field {
    reference_problem()
        .initial_field(grid)
        .expect("datum fits the grid")
}

/// A short penalized run with `count` snapshots, for the check benchmarks.
pub fn short_run(dx: f64, n: f64, t_end: f64, count: usize) -> (Trajectory, Field) {
    let p = reference_problem();
    let grid = reference_grid(dx);
    let u0 = reference_datum(&grid);
    let cfg = SolverConfig::new(n, 1.0 / n, 0.45, t_end).expect("valid solver config");
    let traj = run(
        &cfg,
        &u0,
        &p.obstacle,
        &p.flux,
        &uniform_times(t_end, count),
    )
    .expect("reference run succeeds");
    (traj, u0)
}
