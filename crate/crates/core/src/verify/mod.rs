//! Checks of a computed trajectory against the defining properties of a
//! solution and the a priori estimates.

mod entropy;

pub use entropy::{
    entropy_report, entropy_residual, kruzkov_pair, mollifier, EntropyEntry, EntropyReport,
    EntropyTestConfig, TestBump,
};

use serde::{Deserialize, Serialize};

use crate::error::{OclError, Result};
use crate::mesh::{compensated_sum, Field, Grid1D, TimeSeries};
use crate::model::{obstacle_operator_negative, obstacle_values, FluxSpec, Obstacle};
use crate::solver::{Diagnostics, Trajectory};

/// `max_t |int u(t) - 1|` over the recorded mass series.
pub fn check_mass(traj: &Trajectory) -> f64 {
    traj.mass_series
        .values()
        .iter()
        .map(|m| (m - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Snapshot-wise diagnostics against the obstacle.
pub fn snapshot_diagnostics(
    traj: &Trajectory,
    theta: &(impl Obstacle + ?Sized),
) -> Vec<(f64, Diagnostics)> {
    let grid = traj.grid();
    traj.snapshots
        .iter()
        .map(|s| {
            let th = obstacle_values(theta, grid, s.t);
            (s.t, Diagnostics::of(s.u.values(), &th, grid.dx()))
        })
        .collect()
}

/// `max_t int (u - theta)^+` over the recorded series.
pub fn obstacle_violation(traj: &Trajectory) -> f64 {
    traj.phi_series.max().unwrap_or(0.0)
}

/// `inf_t int_{u < theta} u` over snapshot times.
pub fn alpha_estimate(traj: &Trajectory, theta: &(impl Obstacle + ?Sized)) -> f64 {
    snapshot_diagnostics(traj, theta)
        .iter()
        .map(|(_, d)| d.alpha)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinfReport {
    /// `min_t (|u0|_inf exp(t C / alpha) - |u(t)|_inf)`.
    pub margin: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Compares `|u(t)|_inf` against `|u0|_inf exp(t C_theta / alpha)` at every
/// snapshot. `tolerance` is relative to `|u0|_inf`.
pub fn linf_bound_check(
    traj: &Trajectory,
    u0: &Field,
    c_theta: f64,
    alpha_hat: f64,
    tolerance: f64,
) -> Result<LinfReport> {
    if !(alpha_hat > 0.0) && c_theta > 0.0 {
        return Err(OclError::InvalidArgument(format!(
            "bound needs alpha > 0, got {alpha_hat}"
        )));
    }
    let u0_inf = u0.l_inf_norm();
    let rate = if c_theta == 0.0 {
        0.0
    } else {
        c_theta / alpha_hat
    };
    let mut margin = f64::INFINITY;
    let mut violations = 0;
    for s in &traj.snapshots {
        let m = u0_inf * (s.t * rate).exp() - s.u.l_inf_norm();
        if m < -tolerance * u0_inf {
            violations += 1;
        }
        margin = margin.min(m);
    }
    Ok(LinfReport {
        margin,
        violations,
        pass: violations == 0,
    })
}

/// `sup_t int (H(theta)^- + |theta_xx|) dx` over `n_times + 1` equally
/// spaced times in `[0, t_end]`, midpoint rule on `grid`.
pub fn c_theta_estimate(
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    grid: &Grid1D,
    t_end: f64,
    n_times: usize,
) -> f64 {
    let n_times = n_times.max(1);
    (0..=n_times)
        .map(|j| {
            let t = t_end * j as f64 / n_times as f64;
            compensated_sum(
                grid.centers()
                    .map(|x| obstacle_operator_negative(theta, f, t, x) + theta.d_xx(t, x).abs()),
            ) * grid.dx()
        })
        .fold(0.0, f64::max)
}

/// `lambda_hat(t) = int H(theta)^- chi_{|u - theta| <= tau} dx` at each
/// snapshot.
pub fn reconstruct_multiplier(
    traj: &Trajectory,
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    tau: f64,
) -> Result<TimeSeries> {
    let grid = traj.grid();
    let mut out = TimeSeries::new();
    for s in &traj.snapshots {
        let v = compensated_sum(grid.centers().zip(s.u.values()).map(|(x, &u)| {
            if (u - theta.value(s.t, x)).abs() <= tau {
                obstacle_operator_negative(theta, f, s.t, x)
            } else {
                0.0
            }
        })) * grid.dx();
        out.push(s.t, v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierGap {
    /// Time average of `|lambda_hat - lambda| / max(lambda, floor)`.
    pub mean_relative_gap: f64,
    pub floor: f64,
}

/// Time-averaged (trapezoid on snapshot times) relative gap between the
/// recorded multiplier and its reconstruction. `floor` defaults to
/// `0.05 * max_t lambda`.
pub fn multiplier_gap(
    traj: &Trajectory,
    reconstructed: &TimeSeries,
    floor: Option<f64>,
) -> Result<MultiplierGap> {
    let times = reconstructed.times();
    if times.len() < 2 {
        return Err(OclError::Sampling("need at least two snapshots".into()));
    }
    let lambdas = times
        .iter()
        .map(|&t| traj.lambda_series.value_at(t))
        .collect::<Result<Vec<_>>>()?;
    let floor = floor.unwrap_or_else(|| 0.05 * lambdas.iter().fold(0.0_f64, |a, &b| a.max(b)));
    let rel: Vec<f64> = lambdas
        .iter()
        .zip(reconstructed.values())
        .map(|(&l, &h)| {
            let d = (h - l).abs();
            if d == 0.0 {
                0.0
            } else {
                d / l.max(floor)
            }
        })
        .collect();
    let span = times[times.len() - 1] - times[0];
    let integral: f64 = times
        .windows(2)
        .zip(rel.windows(2))
        .map(|(t, r)| 0.5 * (t[1] - t[0]) * (r[0] + r[1]))
        .sum();
    Ok(MultiplierGap {
        mean_relative_gap: integral / span,
        floor,
    })
}

/// `(TV(u(t)), |u(t_{j+1}) - u(t_j)|_{L1} / (t_{j+1} - t_j))` on snapshots;
/// the difference quotient is stamped at the left time.
pub fn w11_diagnostics(traj: &Trajectory) -> Result<(TimeSeries, TimeSeries)> {
    let mut tv = TimeSeries::new();
    let mut dt_l1 = TimeSeries::new();
    for s in &traj.snapshots {
        tv.push(s.t, s.u.total_variation())?;
    }
    for w in traj.snapshots.windows(2) {
        dt_l1.push(w[0].t, w[1].u.l1_distance(&w[0].u)? / (w[1].t - w[0].t))?;
    }
    Ok((tv, dt_l1))
}

/// `|u(t_1) - u0|_{L1}` at the earliest snapshot.
pub fn ic_recovery_check(traj: &Trajectory, u0: &Field) -> Result<f64> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| OclError::Sampling("trajectory has no snapshots".into()))?;
    first.u.l1_distance(u0)
}

#[cfg(test)]
mod tests;
