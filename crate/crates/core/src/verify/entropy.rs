use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OclError, Result};
use crate::mesh::{Field, TimeSeries};
use crate::model::{FluxSpec, Obstacle};
use crate::solver::Trajectory;

/// `(|u - v|, sgn(u - v) (f(u) - f(v)))` with `sgn(0) = 0`.
#[inline]
pub fn kruzkov_pair(u: f64, v: f64, f: &FluxSpec) -> (f64, f64) {
    let s = sign(u - v);
    ((u - v).abs(), s * (f.f(u) - f.f(v)))
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `exp(1 - 1/(1 - s^2))` on `|s| < 1`, zero outside; peak value 1.
#[inline]
pub fn mollifier(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

#[inline]
fn mollifier_prime(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        mollifier(s) * (-2.0 * s / (d * d))
    }
}

/// Tensor bump `amplitude * psi((t - t_center)/t_radius) psi((x - x_center)/x_radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestBump {
    pub t_center: f64,
    pub t_radius: f64,
    pub x_center: f64,
    pub x_radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl TestBump {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.amplitude * self.time_factor(t).0 * self.space_factor(x).0
    }

    /// `(psi, d/dt psi)` of the temporal factor.
    #[inline]
    fn time_factor(&self, t: f64) -> (f64, f64) {
        let s = (t - self.t_center) / self.t_radius;
        (mollifier(s), mollifier_prime(s) / self.t_radius)
    }

    #[inline]
    fn space_factor(&self, x: f64) -> (f64, f64) {
        let s = (x - self.x_center) / self.x_radius;
        (mollifier(s), mollifier_prime(s) / self.x_radius)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            amplitude: self.amplitude * c,
            ..*self
        }
    }
}

/// Finite family of entropy tests: `k` values times test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyTestConfig {
    pub k_samples: Vec<f64>,
    pub test_functions: Vec<TestBump>,
    pub tolerance: f64,
}

impl EntropyTestConfig {
    /// 21 values of `k` in `[0, 1]` and 30 bumps: temporal centers
    /// `{0, T/3, 2T/3}`, five spatial centers spread over `window`, and two
    /// radius pairs `(T/4, w/8)`, `(T/3, w/5)` with `w` the window width.
    pub fn standard(t_end: f64, window: (f64, f64)) -> Self {
        let k_samples = (0..21).map(|j| j as f64 / 20.0).collect();
        let w = window.1 - window.0;
        let mut test_functions = Vec::with_capacity(30);
        for &(rt, rx) in &[(t_end / 4.0, w / 8.0), (t_end / 3.0, w / 5.0)] {
            for jt in 0..3 {
                for jx in 0..5 {
                    test_functions.push(TestBump {
                        t_center: t_end * jt as f64 / 3.0,
                        t_radius: rt,
                        x_center: window.0 + w * (jx + 1) as f64 / 6.0,
                        x_radius: rx,
                        amplitude: 1.0,
                    });
                }
            }
        }
        Self {
            k_samples,
            test_functions,
            tolerance: 1e-2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.k_samples.iter().find(|k| !(0.0..=1.0).contains(*k)) {
            return Err(OclError::InvalidArgument(format!("k = {k} outside [0, 1]")));
        }
        if self.k_samples.is_empty() || self.test_functions.is_empty() {
            return Err(OclError::InvalidArgument(
                "empty entropy test family".into(),
            ));
        }
        for b in &self.test_functions {
            if !(b.t_radius > 0.0 && b.x_radius > 0.0 && b.amplitude >= 0.0) {
                return Err(OclError::InvalidTestFunction(format!("{b:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEntry {
    pub k: f64,
    pub test_function: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub entries: Vec<EntropyEntry>,
    pub min_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Obstacle samples shared by every entry of the test family.
struct ObstacleCache {
    theta: Vec<Vec<f64>>,
    theta_t: Vec<Vec<f64>>,
    theta_x: Vec<Vec<f64>>,
}

impl ObstacleCache {
    fn new(traj: &Trajectory, theta: &(impl Obstacle + ?Sized)) -> Self {
        let grid = traj.grid();
        let sample = |g: &dyn Fn(f64, f64) -> f64| -> Vec<Vec<f64>> {
            traj.snapshots
                .iter()
                .map(|s| grid.centers().map(|x| g(s.t, x)).collect())
                .collect()
        };
        Self {
            theta: sample(&|t, x| theta.value(t, x)),
            theta_t: sample(&|t, x| theta.d_t(t, x)),
            theta_x: sample(&|t, x| theta.d_x(t, x)),
        }
    }
}

/// Trapezoid weights on the snapshot times.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 { times[j] - times[j - 1] } else { 0.0 };
            let right = if j + 1 < n {
                times[j + 1] - times[j]
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect()
}

fn check_bump(traj: &Trajectory, bump: &TestBump) -> Result<()> {
    let g = traj.grid();
    if bump.x_center - bump.x_radius < g.x_min() || bump.x_center + bump.x_radius > g.x_max() {
        return Err(OclError::InvalidTestFunction(format!(
            "spatial support [{}, {}] leaves the domain [{}, {}]",
            bump.x_center - bump.x_radius,
            bump.x_center + bump.x_radius,
            g.x_min(),
            g.x_max()
        )));
    }
    let t_last = traj.snapshots.last().map(|s| s.t).unwrap_or(0.0);
    if bump.t_center + bump.t_radius > t_last * (1.0 + 1e-12) {
        return Err(OclError::InvalidTestFunction(format!(
            "bump does not vanish before the last snapshot t = {t_last}"
        )));
    }
    let inside = traj
        .snapshots
        .iter()
        .filter(|s| (s.t - bump.t_center).abs() < bump.t_radius)
        .count();
    if inside < 4 {
        return Err(OclError::Sampling(format!(
            "only {inside} snapshots inside the temporal support of {bump:?}"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn residual_cached(
    traj: &Trajectory,
    cache: &ObstacleCache,
    weights: &[f64],
    lambdas: &[f64],
    f: &FluxSpec,
    k: f64,
    bump: &TestBump,
    u0: &Field,
) -> f64 {
    let grid = traj.grid();
    let dx = grid.dx();
    let n = grid.n_cells();
    // Cell range covering the spatial support.
    let lo = (((bump.x_center - bump.x_radius - grid.x_min()) / dx)
        .floor()
        .max(0.0)) as usize;
    let hi = ((((bump.x_center + bump.x_radius - grid.x_min()) / dx).ceil()) as usize).min(n);
    let space: Vec<(f64, f64)> = (lo..hi)
        .map(|i| bump.space_factor(grid.center(i)))
        .collect();

    let mut total = 0.0;
    for (j, s) in traj.snapshots.iter().enumerate() {
        let (pt, pt_t) = bump.time_factor(s.t);
        if pt == 0.0 && pt_t == 0.0 {
            continue;
        }
        let u = s.u.values();
        let (th, th_t, th_x) = (&cache.theta[j], &cache.theta_t[j], &cache.theta_x[j]);
        let mut row = 0.0;
        for (off, &(px, px_x)) in space.iter().enumerate() {
            if px == 0.0 && px_x == 0.0 {
                continue;
            }
            let i = lo + off;
            let v = k * th[i];
            let h_kt = k * th_t[i] + f.f_prime(v) * k * th_x[i];
            let (eta, q) = kruzkov_pair(u[i], v, f);
            let sg = sign(u[i] - v);
            row += px * (eta * pt_t + (lambdas[j] * u[i] - h_kt) * sg * pt) + q * pt * px_x;
        }
        total += weights[j] * row * dx;
    }
    let (p0, _) = bump.time_factor(0.0);
    if p0 != 0.0 {
        let th0 = &cache.theta[0];
        let initial: f64 = space
            .iter()
            .enumerate()
            .map(|(off, &(px, _))| {
                let i = lo + off;
                (u0.values()[i] - k * th0[i]).abs() * px
            })
            .sum();
        total += p0 * initial * dx;
    }
    bump.amplitude * total
}

fn prepare(traj: &Trajectory, lambda_series: &TimeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| OclError::Sampling("trajectory has no snapshots".into()))?;
    if first.t != 0.0 {
        return Err(OclError::Sampling(format!(
            "entropy quadrature needs a snapshot at t = 0, first is {}",
            first.t
        )));
    }
    let times = traj.snapshot_times();
    let lambdas = times
        .iter()
        .map(|&t| lambda_series.value_at(t))
        .collect::<Result<Vec<_>>>()?;
    Ok((trapezoid_weights(&times), lambdas))
}

/// Quadrature value of the entropy inequality for one `(k, phi)`:
/// `int int F(u, k theta) . grad phi + int int (lambda u - H(k theta)) sgn(u - k theta) phi
///  + int |u0 - k theta(0)| phi(0)`.
#[allow(clippy::too_many_arguments)]
pub fn entropy_residual(
    traj: &Trajectory,
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    lambda_series: &TimeSeries,
    k: f64,
    phi: &TestBump,
    u0: &Field,
) -> Result<f64> {
    check_bump(traj, phi)?;
    u0.ensure_same_grid(&traj.snapshots[0].u)?;
    let (weights, lambdas) = prepare(traj, lambda_series)?;
    let cache = ObstacleCache::new(traj, theta);
    Ok(residual_cached(
        traj, &cache, &weights, &lambdas, f, k, phi, u0,
    ))
}

/// Evaluates the whole `(k, phi)` family concurrently; entries are ordered
/// by `k`, then by test function.
pub fn entropy_report(
    traj: &Trajectory,
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    lambda_series: &TimeSeries,
    u0: &Field,
    cfg: &EntropyTestConfig,
) -> Result<EntropyReport> {
    cfg.validate()?;
    for b in &cfg.test_functions {
        check_bump(traj, b)?;
    }
    u0.ensure_same_grid(&traj.snapshots[0].u)?;
    let (weights, lambdas) = prepare(traj, lambda_series)?;
    let cache = ObstacleCache::new(traj, theta);
    let pairs: Vec<(f64, usize)> = cfg
        .k_samples
        .iter()
        .flat_map(|&k| (0..cfg.test_functions.len()).map(move |j| (k, j)))
        .collect();
    let entries: Vec<EntropyEntry> = pairs
        .par_iter()
        .map(|&(k, j)| EntropyEntry {
            k,
            test_function: j,
            residual: residual_cached(
                traj,
                &cache,
                &weights,
                &lambdas,
                f,
                k,
                &cfg.test_functions[j],
                u0,
            ),
        })
        .collect();
    let min_residual = entries
        .iter()
        .map(|e| e.residual)
        .fold(f64::INFINITY, f64::min);
    Ok(EntropyReport {
        entries,
        min_residual,
        tolerance: cfg.tolerance,
        pass: min_residual >= -cfg.tolerance,
    })
}
