//! Scalar checks of one run, computed from its trajectory alone so that
//! `verify` can repeat them from persisted snapshots.

use anyhow::Result;
use ocl_core::compat::check_comparison;
use ocl_core::verify::{
    alpha_estimate, c_theta_estimate, check_mass, entropy_report, ic_recovery_check,
    linf_bound_check, multiplier_gap, obstacle_violation, reconstruct_multiplier, w11_diagnostics,
};
use ocl_core::{Field, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::Resolved;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunChecks {
    /// `max_t |int u - 1|`.
    pub mass_dev: f64,
    pub mass_pass: bool,
    /// `max_t int (u - theta)^+`.
    pub max_phi: f64,
    pub alpha_hat: f64,
    pub c_theta: f64,
    /// `NaN` when the bound is undefined (`alpha_hat = 0` with `C > 0`).
    pub linf_margin: f64,
    pub linf_violations: usize,
    pub linf_pass: bool,
    /// Largest `(v - u)^+` against the unconstrained sub-solution.
    pub comparison_violation: f64,
    pub comparison_tolerance: f64,
    pub comparison_pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_min_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_pass: Option<bool>,
    pub ic_recovery: f64,
    pub tv_max: f64,
    pub dt_l1_max: f64,
    pub multiplier_tau: f64,
    /// Reported only; the pointwise-in-time comparison is heuristic.
    pub multiplier_gap: f64,
    pub pass: bool,
}

/// `u0` must be the datum on the run grid and `sub` the unconstrained run
/// from `min(u0, gamma)` sampled at the same times.
pub fn compute_checks(
    r: &Resolved,
    traj: &Trajectory,
    sub: &Trajectory,
    u0: &Field,
) -> Result<RunChecks> {
    let theta = &r.problem.obstacle;
    let f = &r.problem.flux;
    let v = &r.config.verify;
    let t_end = r.solver.t_end;

    let mass_dev = check_mass(traj);
    let alpha_hat = alpha_estimate(traj, theta);
    let c_theta = c_theta_estimate(theta, f, traj.grid(), t_end, v.c_theta_times);
    let (linf_margin, linf_violations, linf_pass) =
        match linf_bound_check(traj, u0, c_theta, alpha_hat, v.linf_tol) {
            Ok(rep) => (rep.margin, rep.violations, rep.pass),
            Err(_) => (f64::NAN, 0, false),
        };
    let comparison_tolerance = 2.0 * traj.grid().dx() * u0.total_variation();
    let cmp = check_comparison(traj, sub, comparison_tolerance)?;

    let entropy = match &r.entropy {
        Some(e) => Some(entropy_report(traj, theta, f, &traj.lambda_series, u0, e)?),
        None => None,
    };
    let (tv, dt_l1) = w11_diagnostics(traj)?;
    let tau = v.tau_factor / r.solver.n;
    let rec = reconstruct_multiplier(traj, theta, f, tau)?;
    let gap = multiplier_gap(traj, &rec, v.gap_floor)?;

    let mass_pass = mass_dev <= v.mass_tol;
    let entropy_pass = entropy.as_ref().map(|e| e.pass);
    Ok(RunChecks {
        mass_dev,
        mass_pass,
        max_phi: obstacle_violation(traj),
        alpha_hat,
        c_theta,
        linf_margin,
        linf_violations,
        linf_pass,
        comparison_violation: cmp.max_violation,
        comparison_tolerance,
        comparison_pass: cmp.pass,
        entropy_min_residual: entropy.as_ref().map(|e| e.min_residual),
        entropy_pass,
        ic_recovery: ic_recovery_check(traj, u0)?,
        tv_max: tv.max().unwrap_or(0.0),
        dt_l1_max: dt_l1.max().unwrap_or(0.0),
        multiplier_tau: tau,
        multiplier_gap: gap.mean_relative_gap,
        pass: mass_pass && linf_pass && cmp.pass && entropy_pass.unwrap_or(true),
    })
}

impl RunChecks {
    /// `name value` lines for the terminal.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("mass_dev {:e} ({})", self.mass_dev, verdict(self.mass_pass)),
            format!("max_phi {:e}", self.max_phi),
            format!("alpha_hat {:e}", self.alpha_hat),
            format!("c_theta {:e}", self.c_theta),
            format!(
                "linf_margin {:e} violations {} ({})",
                self.linf_margin,
                self.linf_violations,
                verdict(self.linf_pass)
            ),
            format!(
                "comparison {:e} <= {:e} ({})",
                self.comparison_violation,
                self.comparison_tolerance,
                verdict(self.comparison_pass)
            ),
        ];
        if let (Some(m), Some(p)) = (self.entropy_min_residual, self.entropy_pass) {
            out.push(format!("entropy_min_residual {m:e} ({})", verdict(p)));
        }
        out.extend([
            format!("ic_recovery {:e}", self.ic_recovery),
            format!("tv_max {:e}", self.tv_max),
            format!("dt_l1_max {:e}", self.dt_l1_max),
            format!(
                "multiplier_gap {:e} (tau {:e})",
                self.multiplier_gap, self.multiplier_tau
            ),
            format!("overall {}", verdict(self.pass)),
        ]);
        out
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}
