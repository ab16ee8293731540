//! Compatibility between the initial datum and the obstacle, and the
//! comparison check between the penalized run and the unconstrained
//! sub-solution.

use serde::{Deserialize, Serialize};

use crate::error::{OclError, Result};
use crate::mesh::{compensated_sum, Field, TimeSeries};
use crate::model::{obstacle_values, FluxSpec, Obstacle};
use crate::solver::{solve_homogeneous_with, uniform_times, SolverConfig, Trajectory};

pub const DEFAULT_MARGIN: f64 = 0.05;

/// Below this, `int_{u0 > 0} theta(0) - 1` certifies that no admissible
/// sub-solution can have a positive `beta`.
const CERTIFICATE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Compatible => "compatible",
            Verdict::Incompatible => "incompatible",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Knobs of the compatibility test. `None` selects the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatConfig {
    /// Cap of the sub-solution datum; default `theta_lower / 2`.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Support threshold; default `1e-8 * |v0|_inf`.
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Viscosity standing in for the inviscid problem; default `dx`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_output_count")]
    pub output_count: usize,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

fn default_output_count() -> usize {
    101
}

impl Default for CompatConfig {
    fn default() -> Self {
        Self {
            gamma: None,
            zeta: None,
            margin: DEFAULT_MARGIN,
            eps: None,
            output_count: default_output_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub gamma: f64,
    pub zeta: f64,
    pub margin: f64,
    /// `min_t int_{v(t) > zeta} theta(t) dx - 1`.
    pub beta_hat: f64,
    pub time_of_minimum: f64,
    /// `int_{u0 > 0} theta(0) dx - 1`, an upper bound for `beta` over every
    /// admissible sub-solution.
    pub beta_upper_bound: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub support_integral: TimeSeries,
}

/// `v0 = min(u0, gamma)` for `0 < gamma < theta_lower`.
pub fn construct_v0(u0: &Field, theta_lower: f64, gamma: f64) -> Result<Field> {
    if !(gamma > 0.0 && gamma < theta_lower) {
        return Err(OclError::InvalidArgument(format!(
            "need 0 < gamma < theta_lower, got gamma = {gamma}, theta_lower = {theta_lower}"
        )));
    }
    let v0 = u0.map(|u| u.min(gamma));
    for (v, u) in v0.values().iter().zip(u0.values()) {
        assert!(
            *v <= *u && *v <= theta_lower,
            "sub-solution datum above u0 or theta"
        );
    }
    Ok(v0)
}

/// Verdict rule with the structural certificate taking precedence.
pub fn classify(beta_hat: f64, beta_upper_bound: f64, margin: f64) -> Verdict {
    if beta_upper_bound <= CERTIFICATE_FLOOR || beta_hat < -margin {
        Verdict::Incompatible
    } else if beta_hat > margin {
        Verdict::Compatible
    } else {
        Verdict::Inconclusive
    }
}

/// `int_{v > zeta} theta(t) dx`.
pub fn thresholded_obstacle_mass(
    v: &Field,
    theta: &(impl Obstacle + ?Sized),
    t: f64,
    zeta: f64,
) -> f64 {
    let th = obstacle_values(theta, v.grid(), t);
    compensated_sum(
        v.values()
            .iter()
            .zip(&th)
            .map(|(&v, &th)| if v > zeta { th } else { 0.0 }),
    ) * v.grid().dx()
}

/// Runs the unconstrained problem from `min(u0, gamma)` and measures the
/// obstacle mass over its support.
pub fn check_compatibility(
    u0: &Field,
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    t_end: f64,
    cfg: &CompatConfig,
) -> Result<CompatibilityReport> {
    let theta_lower = theta.lower_bound();
    let gamma = cfg.gamma.unwrap_or(0.5 * theta_lower);
    let v0 = construct_v0(u0, theta_lower, gamma)?;
    let zeta = cfg.zeta.unwrap_or(1e-8 * v0.l_inf_norm());
    if !(zeta > 0.0) {
        return Err(OclError::InvalidArgument(format!(
            "support threshold must be positive, got {zeta}"
        )));
    }
    let dx = u0.grid().dx();
    let solver = SolverConfig {
        n: 0.0,
        eps: cfg.eps.unwrap_or(dx),
        cfl: 0.45,
        t_end,
        splitting: Default::default(),
        reaction_dt_cap: 0.5,
        // Only the support matters here, so mass may leave the box.
        boundary_leak_tol: f64::INFINITY,
    };
    let times = uniform_times(t_end, cfg.output_count);
    let traj = solve_homogeneous_with(&solver, &v0, f, &times)?;
    let mut series = TimeSeries::new();
    for s in &traj.snapshots {
        series.push(s.t, thresholded_obstacle_mass(&s.u, theta, s.t, zeta))?;
    }
    let (s_min, time_of_minimum) = series
        .min_with_time()
        .ok_or_else(|| OclError::Sampling("no snapshots".into()))?;
    let beta_hat = s_min - 1.0;

    let th0 = obstacle_values(theta, u0.grid(), 0.0);
    let beta_upper_bound =
        compensated_sum(
            u0.values()
                .iter()
                .zip(&th0)
                .map(|(&u, &th)| if u > 0.0 { th } else { 0.0 }),
        ) * dx
            - 1.0;
    Ok(CompatibilityReport {
        gamma,
        zeta,
        margin: cfg.margin,
        beta_hat,
        time_of_minimum,
        beta_upper_bound,
        verdict: classify(beta_hat, beta_upper_bound, cfg.margin),
        support_integral: series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max_{i, t} (v_i - u_i)^+`.
    pub max_violation: f64,
    pub time_of_max: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `v <= u` cellwise at every shared snapshot.
pub fn check_comparison(
    u_traj: &Trajectory,
    v_traj: &Trajectory,
    tol: f64,
) -> Result<ComparisonReport> {
    if u_traj.grid() != v_traj.grid() {
        return Err(OclError::GridMismatch(
            "comparison trajectories differ in grid".into(),
        ));
    }
    if u_traj.snapshots.len() != v_traj.snapshots.len() {
        return Err(OclError::Sampling(format!(
            "{} vs {} snapshots",
            u_traj.snapshots.len(),
            v_traj.snapshots.len()
        )));
    }
    let mut worst = (0.0_f64, 0.0);
    for (su, sv) in u_traj.snapshots.iter().zip(&v_traj.snapshots) {
        if (su.t - sv.t).abs() > 1e-12 * su.t.abs().max(1.0) {
            return Err(OclError::Sampling(format!(
                "snapshot times differ: {} vs {}",
                su.t, sv.t
            )));
        }
        let gap =
            sv.u.values()
                .iter()
                .zip(su.u.values())
                .map(|(v, u)| (v - u).max(0.0))
                .fold(0.0, f64::max);
        if gap > worst.0 {
            worst = (gap, su.t);
        }
    }
    Ok(ComparisonReport {
        max_violation: worst.0,
        time_of_max: worst.1,
        tolerance: tol,
        pass: worst.0 <= tol,
    })
}
