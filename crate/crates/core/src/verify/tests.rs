use proptest::prelude::*;

use super::*;
use crate::model::{InitialData, ObstacleSpec};
use crate::solver::{run, solve_homogeneous, uniform_times, SolverConfig};

#[test]
fn kruzkov_examples() {
    let f = FluxSpec::burgers(4.0).unwrap();
    assert_eq!(kruzkov_pair(0.3, 0.3, &f), (0.0, 0.0));
    assert_eq!(kruzkov_pair(2.0, 1.0, &f), (1.0, 1.5));
    assert_eq!(kruzkov_pair(1.0, 2.0, &f), kruzkov_pair(2.0, 1.0, &f));
}

fn stationary_setup(c: f64, theta_value: f64) -> (Trajectory, ObstacleSpec, Field, FluxSpec) {
    let grid = Grid1D::new(0.0, 4.0, 400).unwrap();
    let u = Field::constant(grid, c).unwrap();
    let theta = ObstacleSpec::Constant { value: theta_value };
    let traj = Trajectory::stationary(&u, &theta, 10.0, &uniform_times(1.0, 101)).unwrap();
    (traj, theta, u, FluxSpec::burgers(4.0).unwrap())
}

#[test]
fn stationary_constant_state_has_vanishing_residual() {
    let (traj, theta, u0, f) = stationary_setup(0.25, 2.0);
    let cfg = EntropyTestConfig::standard(1.0, (1.0, 3.0));
    let rep = entropy_report(&traj, &theta, &f, &traj.lambda_series, &u0, &cfg).unwrap();
    assert_eq!(rep.entries.len(), 21 * 30);
    for e in &rep.entries {
        assert!(e.residual.abs() < 2e-3, "{e:?}");
    }
    assert!(rep.pass);
}

#[test]
fn test_function_outside_domain_is_rejected() {
    let (traj, theta, u0, f) = stationary_setup(0.25, 2.0);
    let bump = TestBump {
        t_center: 0.5,
        t_radius: 0.25,
        x_center: 3.9,
        x_radius: 0.5,
        amplitude: 1.0,
    };
    let err = entropy_residual(&traj, &theta, &f, &traj.lambda_series, 0.5, &bump, &u0);
    assert!(matches!(err, Err(OclError::InvalidTestFunction(_))));
    let late = TestBump {
        t_center: 0.9,
        x_center: 2.0,
        ..bump
    };
    let err = entropy_residual(&traj, &theta, &f, &traj.lambda_series, 0.5, &late, &u0);
    assert!(matches!(err, Err(OclError::InvalidTestFunction(_))));
}

fn burgers_box_run() -> (Trajectory, ObstacleSpec, Field, FluxSpec) {
    let grid = Grid1D::with_spacing(-0.5, 2.5, 1.0 / 400.0).unwrap();
    let u0 = InitialData::Box { a: 0.0, b: 1.0 }
        .discretize(&grid)
        .unwrap();
    // Never touched: u stays below 1.
    let theta = ObstacleSpec::Constant { value: 2.0 };
    let f = FluxSpec::burgers(4.0).unwrap();
    let cfg = SolverConfig::new(10.0, 1e-4, 0.45, 1.0).unwrap();
    let traj = run(&cfg, &u0, &theta, &f, &uniform_times(1.0, 101)).unwrap();
    (traj, theta, u0, f)
}

#[test]
fn burgers_shock_run_satisfies_entropy_inequalities() {
    let (traj, theta, u0, f) = burgers_box_run();
    let cfg = EntropyTestConfig::standard(1.0, (-0.2, 2.0));
    let rep = entropy_report(&traj, &theta, &f, &traj.lambda_series, &u0, &cfg).unwrap();
    assert!(
        rep.min_residual >= -1e-2,
        "min residual {}",
        rep.min_residual
    );
    // For u >= 0 and k = 0 the inequality is the weak form itself, so the
    // residual is pure discretization error.
    for e in rep.entries.iter().filter(|e| e.k == 0.0) {
        assert!(e.residual.abs() <= 5e-3, "{e:?}");
    }
}

#[test]
fn residual_is_positively_homogeneous_in_the_test_function() {
    let (traj, theta, u0, f) = burgers_box_run();
    let bump = EntropyTestConfig::standard(1.0, (-0.2, 2.0)).test_functions[7];
    let base = entropy_residual(&traj, &theta, &f, &traj.lambda_series, 0.4, &bump, &u0).unwrap();
    for c in [0.5, 3.0, 17.0] {
        let r = entropy_residual(
            &traj,
            &theta,
            &f,
            &traj.lambda_series,
            0.4,
            &bump.scaled(c),
            &u0,
        )
        .unwrap();
        assert!((r - c * base).abs() <= 1e-12 * (c * base).abs().max(1e-12));
    }
}

#[test]
fn mass_and_violation_examples() {
    let (traj, _, u0, _) = burgers_box_run();
    assert!(check_mass(&traj) <= 1e-10);
    assert_eq!(traj.mass_series.values()[0], u0.integrate());
    assert_eq!(obstacle_violation(&traj), 0.0);
}

#[test]
fn alpha_examples() {
    let (traj, theta, _, _) = stationary_setup(0.25, 2.0);
    assert!((alpha_estimate(&traj, &theta) - 1.0).abs() < 1e-12);
    let grid = Grid1D::new(0.0, 1.0, 10).unwrap();
    let u = Field::constant(grid, 1.0).unwrap();
    let touching = ObstacleSpec::Constant { value: 1.0 };
    let t = Trajectory::stationary(&u, &touching, 1.0, &[0.0, 1.0]).unwrap();
    assert_eq!(alpha_estimate(&t, &touching), 0.0);
}

#[test]
fn linf_bound_examples() {
    let (traj, theta, u0, f) = burgers_box_run();
    let c = c_theta_estimate(&theta, &f, traj.grid(), 1.0, 10);
    assert_eq!(c, 0.0);
    let rep = linf_bound_check(&traj, &u0, c, 1.0, 1e-12).unwrap();
    assert!(rep.pass, "{rep:?}");
    let first = Trajectory::stationary(&u0, &theta, 1.0, &[0.0]).unwrap();
    assert_eq!(
        linf_bound_check(&first, &u0, 3.0, 0.5, 0.0).unwrap().margin,
        0.0
    );
}

#[test]
fn c_theta_examples() {
    let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
    let lin = FluxSpec::linear(1.0, 4.0).unwrap();
    let parabola = ObstacleSpec::Parabola {
        floor: 0.5,
        curvature: 1.0,
        center: 0.0,
    };
    assert!((c_theta_estimate(&parabola, &lin, &grid, 1.0, 4) - 2.0).abs() < 1e-12);
    let flat = ObstacleSpec::Constant { value: 3.0 };
    assert_eq!(c_theta_estimate(&flat, &lin, &grid, 1.0, 4), 0.0);
}

#[test]
fn c_theta_is_stable_under_time_refinement() {
    let grid = Grid1D::new(-3.0, 3.0, 600).unwrap();
    let f = FluxSpec::burgers(4.0).unwrap();
    let dip = ObstacleSpec::MovingDip {
        floor: 0.3,
        depth: 1.0,
        center: 1.0,
        speed: -1.3,
        width: 0.4,
    };
    let coarse = c_theta_estimate(&dip, &f, &grid, 1.5, 100);
    let fine = c_theta_estimate(&dip, &f, &grid, 1.5, 200);
    assert!(((fine - coarse) / fine).abs() < 0.01);
}

#[test]
fn reconstruction_vanishes_without_negative_operator() {
    let (traj, theta, _, f) = burgers_box_run();
    let rec = reconstruct_multiplier(&traj, &theta, &f, 1.0).unwrap();
    assert!(rec.values().iter().all(|&v| v == 0.0));
    let gap = multiplier_gap(&traj, &rec, Some(1e-3)).unwrap();
    assert_eq!(gap.mean_relative_gap, 0.0);
}

#[test]
fn w11_examples() {
    let (traj, _, u0, _) = stationary_setup(0.25, 2.0);
    let (tv, dt) = w11_diagnostics(&traj).unwrap();
    assert!(dt.values().iter().all(|&v| v == 0.0));
    assert_eq!(tv.values()[0], u0.total_variation());
}

#[test]
fn initial_condition_recovery() {
    let (traj, _, u0, _) = burgers_box_run();
    assert_eq!(ic_recovery_check(&traj, &u0).unwrap(), 0.0);

    // Lipschitz datum: O(t) drift.
    let grid = Grid1D::new(-2.0, 3.0, 1000).unwrap();
    let bump = InitialData::Bump {
        center: 0.0,
        half_width: 1.0,
    }
    .discretize(&grid)
    .unwrap();
    let f = FluxSpec::burgers(4.0).unwrap();
    let at = |t1: f64| {
        let tr = solve_homogeneous(&bump, &f, 1e-3, t1, &[t1]).unwrap();
        ic_recovery_check(&tr, &bump).unwrap()
    };
    let (d1, d2) = (at(0.02), at(0.01));
    assert!(d2 <= 0.52 * d1, "{d1} -> {d2}");
}

#[test]
fn step_datum_smears_like_the_heat_kernel() {
    let grid = Grid1D::new(-1.0, 2.0, 3000).unwrap();
    let u0 = InitialData::Box { a: 0.0, b: 1.0 }
        .discretize(&grid)
        .unwrap();
    let f = FluxSpec::linear(0.0, 4.0).unwrap();
    let (eps, t1) = (0.01, 0.1);
    let tr = solve_homogeneous(&u0, &f, eps, t1, &[t1]).unwrap();
    let d = ic_recovery_check(&tr, &u0).unwrap();
    // Two unit steps, each contributing 2 sqrt(eps t / pi).
    let oracle = 4.0 * (eps * t1 / std::f64::consts::PI).sqrt();
    assert!(((d - oracle) / oracle).abs() < 0.05, "{d} vs {oracle}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kruzkov_entropy_is_nonnegative_and_symmetric(u in -3.0f64..3.0, v in -3.0f64..3.0) {
        let f = FluxSpec::burgers(4.0).unwrap();
        let (eta, q) = kruzkov_pair(u, v, &f);
        prop_assert!(eta >= 0.0);
        prop_assert_eq!(eta == 0.0, u == v);
        prop_assert_eq!((eta, q), kruzkov_pair(v, u, &f));
    }

    #[test]
    fn mass_partitions_into_reserve_and_excess(
        vals in prop::collection::vec(0.0f64..3.0, 12),
        level in 0.1f64..2.0,
    ) {
        let grid = Grid1D::new(0.0, 1.2, 12).unwrap();
        let u = Field::new(grid, vals).unwrap();
        let theta = ObstacleSpec::Constant { value: level };
        let traj = Trajectory::stationary(&u, &theta, 1.0, &[0.0]).unwrap();
        let (_, d) = snapshot_diagnostics(&traj, &theta)[0];
        prop_assert!(d.alpha + d.phi <= u.integrate() + 1e-12);
        prop_assert!(d.alpha >= 0.0 && d.phi >= 0.0);
    }

    #[test]
    fn reconstruction_is_nonnegative(
        vals in prop::collection::vec(0.0f64..2.0, 40),
        tau in 0.01f64..1.0,
    ) {
        let grid = Grid1D::new(-1.0, 1.0, 40).unwrap();
        let u = Field::new(grid, vals).unwrap();
        let dip = ObstacleSpec::MovingDip { floor: 0.4, depth: 1.0, center: 0.0, speed: 0.8, width: 0.3 };
        let f = FluxSpec::burgers(4.0).unwrap();
        let traj = Trajectory::stationary(&u, &dip, 1.0, &[0.0, 0.5]).unwrap();
        let rec = reconstruct_multiplier(&traj, &dip, &f, tau).unwrap();
        prop_assert!(rec.values().iter().all(|&v| v >= 0.0));
    }
}
