//! Ladders of `(n, eps, dx)` runs, decay-rate fits and Cauchy checks.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, OclError, Result};
use crate::mesh::{compensated_sum, fmt_f64, Field, Grid1D};
use crate::model::ProblemSpec;
use crate::solver::{
    contraction_horizon, estimate_contraction, run, standard_seeds, uniform_times, SolverConfig,
    Trajectory, PICARD_RADIUS,
};
use crate::verify::{
    alpha_estimate, check_mass, entropy_report, obstacle_violation, w11_diagnostics,
    EntropyTestConfig,
};

/// One `(n, eps)` pair of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderPoint {
    pub n: f64,
    pub eps: f64,
}

/// `eps = c / n` for every `n`.
pub fn coupled_ladder(ns: &[f64], c: f64) -> Vec<LadderPoint> {
    ns.iter().map(|&n| LadderPoint { n, eps: c / n }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub problem: ProblemSpec,
    /// Truncated domain shared by every grid of the ladder.
    pub domain: (f64, f64),
    pub points: Vec<LadderPoint>,
    /// Grid spacings, coarse to fine.
    pub dx_ladder: Vec<f64>,
    /// `n` and `eps` are overwritten per point.
    pub solver: SolverConfig,
    pub output_times: Vec<f64>,
    pub entropy: Option<EntropyTestConfig>,
    /// Measure the Picard contraction factor with this many iterates.
    pub picard_iterations: Option<usize>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.dx_ladder.is_empty() {
            return Err(OclError::InvalidArgument("empty sweep".into()));
        }
        for w in self.points.windows(2) {
            if !(w[1].n > w[0].n) {
                return Err(validation(
                    "n strictly increasing",
                    format!("{} then {}", w[0].n, w[1].n),
                ));
            }
            if w[1].eps > w[0].eps {
                return Err(validation(
                    "eps nonincreasing",
                    format!("{} then {}", w[0].eps, w[1].eps),
                ));
            }
        }
        for p in &self.points {
            SolverConfig {
                n: p.n,
                eps: p.eps,
                ..self.solver
            }
            .validate()?;
        }
        if self.dx_ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(validation(
                "dx ladder decreasing",
                format!("{:?}", self.dx_ladder),
            ));
        }
        for &dx in &self.dx_ladder {
            Grid1D::with_spacing(self.domain.0, self.domain.1, dx)?;
        }
        if let Some(e) = &self.entropy {
            e.validate()?;
        }
        Ok(())
    }

    /// Every `(point, dx)` combination in record order: coarse grids first,
    /// then increasing `n`.
    pub fn keys(&self) -> Vec<(LadderPoint, f64)> {
        self.dx_ladder
            .iter()
            .flat_map(|&dx| self.points.iter().map(move |&p| (p, dx)))
            .collect()
    }
}

/// Scalar results and the full trajectory of one successful point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub u0: Field,
    pub trajectory: Trajectory,
    pub max_phi: f64,
    pub alpha_hat: f64,
    pub mass_dev: f64,
    pub tv_max: f64,
    pub dt_l1_max: f64,
    pub entropy_min_residual: Option<f64>,
    pub k_hat: Option<f64>,
}

impl PointSummary {
    pub fn final_field(&self) -> &Field {
        self.trajectory
            .final_field()
            .expect("runs always record a final snapshot")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: f64,
    pub eps: f64,
    pub dx: f64,
    pub outcome: std::result::Result<PointSummary, OclError>,
}

impl SweepRecord {
    pub fn summary(&self) -> Option<&PointSummary> {
        self.outcome.as_ref().ok()
    }
}

fn run_point(cfg: &SweepConfig, p: LadderPoint, dx: f64) -> Result<PointSummary> {
    let grid = Grid1D::with_spacing(cfg.domain.0, cfg.domain.1, dx)?;
    let prob = &cfg.problem;
    let u0 = prob.initial_field(&grid)?;
    let scfg = SolverConfig {
        n: p.n,
        eps: p.eps,
        ..cfg.solver
    };
    let traj = run(&scfg, &u0, &prob.obstacle, &prob.flux, &cfg.output_times)?;
    let (tv, dt_l1) = w11_diagnostics(&traj)?;
    let entropy_min_residual = match &cfg.entropy {
        Some(e) => Some(
            entropy_report(
                &traj,
                &prob.obstacle,
                &prob.flux,
                &traj.lambda_series,
                &u0,
                e,
            )?
            .min_residual,
        ),
        None => None,
    };
    let k_hat = match cfg.picard_iterations {
        Some(iters) => {
            let t0 = contraction_horizon(p.n, PICARD_RADIUS, 0.5)?;
            let times = uniform_times(t0, 21);
            let seeds = standard_seeds(&u0, &prob.obstacle, p.n, &times)?;
            let report = estimate_contraction(
                &scfg,
                &prob.flux,
                &prob.obstacle,
                &u0,
                (&seeds.0, &seeds.1),
                iters,
            )?;
            Some(report.k_hat)
        }
        None => None,
    };
    Ok(PointSummary {
        max_phi: obstacle_violation(&traj),
        alpha_hat: alpha_estimate(&traj, &prob.obstacle),
        mass_dev: check_mass(&traj),
        tv_max: tv.max().unwrap_or(0.0),
        dt_l1_max: dt_l1.max().unwrap_or(0.0),
        entropy_min_residual,
        k_hat,
        u0,
        trajectory: traj,
    })
}

/// Runs every point concurrently. A failing point is recorded, not raised.
/// Records come back in [`SweepConfig::keys`] order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    Ok(cfg
        .keys()
        .into_par_iter()
        .map(|(p, dx)| SweepRecord {
            n: p.n,
            eps: p.eps,
            dx,
            outcome: run_point(cfg, p, dx),
        })
        .collect())
}

/// Least-squares slope of `ln ys` against `ln xs`.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(OclError::InvalidArgument(format!(
            "rate fit needs >= 3 paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(OclError::InvalidArgument(format!(
            "rate fit needs positive samples, got {v}"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(OclError::InvalidArgument(
            "rate fit needs distinct xs".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Cell-average agglomeration of `fine` onto `coarse`. The grids must share
/// their endpoints and `coarse` cells must each cover a whole number of fine
/// cells.
pub fn restrict(fine: &Field, coarse: &Grid1D) -> Result<Field> {
    let g = fine.grid();
    let tol = 1e-12 * (g.x_max() - g.x_min());
    if (g.x_min() - coarse.x_min()).abs() > tol || (g.x_max() - coarse.x_max()).abs() > tol {
        return Err(OclError::GridMismatch(format!(
            "[{}, {}] vs [{}, {}]",
            g.x_min(),
            g.x_max(),
            coarse.x_min(),
            coarse.x_max()
        )));
    }
    if !g.n_cells().is_multiple_of(coarse.n_cells()) {
        return Err(OclError::GridMismatch(format!(
            "{} fine cells do not nest in {} coarse cells",
            g.n_cells(),
            coarse.n_cells()
        )));
    }
    let r = g.n_cells() / coarse.n_cells();
    let values = fine
        .values()
        .chunks(r)
        .map(|c| compensated_sum(c.iter().copied()) / r as f64)
        .collect();
    Field::new(*coarse, values)
}

/// L1 gap between two final fields, on the coarser of the two grids.
pub fn field_gap(a: &Field, b: &Field) -> Result<f64> {
    let (coarse, fine) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let fine_on_coarse = if fine.grid() == coarse.grid() {
        fine.clone()
    } else {
        restrict(fine, coarse.grid())?
    };
    coarse.l1_distance(&fine_on_coarse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyReport {
    /// `gaps[i]` compares record `i + 1` with record `i`; `None` when either
    /// point failed or the grids do not nest.
    pub gaps: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

impl CauchyReport {
    /// All gaps present and nonincreasing.
    pub fn monotone(&self) -> bool {
        self.gaps.iter().all(Option::is_some)
            && self
                .gaps
                .windows(2)
                .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b <= a))
    }
}

/// Successive L1 gaps between final fields. Non-monotone gaps and missing
/// comparisons are reported as warnings.
pub fn cauchy_check(records: &[SweepRecord]) -> CauchyReport {
    let mut gaps = Vec::with_capacity(records.len().saturating_sub(1));
    let mut warnings = Vec::new();
    for (i, w) in records.windows(2).enumerate() {
        let gap = match (w[0].summary(), w[1].summary()) {
            (Some(a), Some(b)) => match field_gap(a.final_field(), b.final_field()) {
                Ok(g) => Some(g),
                Err(e) => {
                    warnings.push(format!("gap {i}: {e}"));
                    None
                }
            },
            _ => {
                warnings.push(format!("gap {i}: a neighbouring point failed"));
                None
            }
        };
        gaps.push(gap);
    }
    for (i, w) in gaps.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            if b > a {
                warnings.push(format!("gap {} grew from {a:e} to {b:e}", i + 1));
            }
        }
    }
    CauchyReport { gaps, warnings }
}

pub const SUMMARY_HEADER: &str =
    "n,eps,dx,max_phi,alpha_hat,mass_dev,tv_max,l1_gap_to_prev,entropy_min_residual";

/// One row per record; failed points and missing values are left empty.
pub fn write_summary_csv<W: Write>(
    records: &[SweepRecord],
    cauchy: &CauchyReport,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for (i, r) in records.iter().enumerate() {
        let gap = if i == 0 { None } else { cauchy.gaps[i - 1] };
        let s = r.summary();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.n),
            fmt_f64(r.eps),
            fmt_f64(r.dx),
            opt(s.map(|s| s.max_phi)),
            opt(s.map(|s| s.alpha_hat)),
            opt(s.map(|s| s.mass_dev)),
            opt(s.map(|s| s.tv_max)),
            opt(gap),
            opt(s.and_then(|s| s.entropy_min_residual)),
        )?;
    }
    Ok(())
}
