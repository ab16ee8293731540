use super::config::SolverConfig;
use super::run::{integrate, Trajectory};
use super::scheme::Multiplier;
use crate::error::{OclError, Result};
use crate::mesh::Field;
use crate::model::{FluxSpec, Obstacle};

/// Radius of the ball the fixed-point map acts on.
pub const PICARD_RADIUS: f64 = 2.0;

/// Outcome of a contraction measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub t0: f64,
    pub k_hat: f64,
    /// `sup_t |w_{k+1} - w_k|_{L1}` for successive iterates `w_{k+1} = Phi(w_k)`.
    pub iterate_distances: Vec<f64>,
    pub r: f64,
}

impl PicardReport {
    pub fn contracting(&self) -> bool {
        self.k_hat < 1.0
    }

    /// Successive distances shrink strictly (or have reached round-off).
    pub fn geometric(&self) -> bool {
        self.iterate_distances
            .windows(2)
            .all(|w| w[1] < w[0] || w[0] <= 1e-14)
    }
}

/// Largest `T` with `2 n T exp(2 R n T) <= target`.
pub fn contraction_horizon(n: f64, r: f64, target: f64) -> Result<f64> {
    if !(n > 0.0 && r > 0.0 && target > 0.0) {
        return Err(OclError::InvalidArgument(format!(
            "contraction horizon needs n, R, target > 0 (got {n}, {r}, {target})"
        )));
    }
    let g = |t: f64| 2.0 * n * t * (2.0 * r * n * t).exp() - target;
    let (mut lo, mut hi) = (0.0, 1.0 / n);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `Phi(u_bar)`: the penalized viscous problem with the nonlocal factor
/// frozen from `u_bar`, i.e. `lambda(t) = n * phi_{u_bar}(t)`. Snapshots are
/// taken at `u_bar`'s snapshot times.
pub fn picard_iterate(
    u_bar: &Trajectory,
    cfg: &SolverConfig,
    f: &FluxSpec,
    theta: &(impl Obstacle + ?Sized),
    u0: &Field,
) -> Result<Trajectory> {
    cfg.validate()?;
    u0.ensure_same_grid(&Field::zeros(*u_bar.grid()))?;
    let span = u_bar.phi_series.times().last().copied().unwrap_or(0.0);
    if span + 1e-12 * cfg.t_end.max(1.0) < cfg.t_end {
        return Err(OclError::Sampling(format!(
            "frozen trajectory covers [0, {span}] but the map needs [0, {}]",
            cfg.t_end
        )));
    }
    let n = cfg.n;
    let phi = &u_bar.phi_series;
    let lambda = move |t: f64| -> Result<f64> { Ok(n * phi.value_at(t.min(span))?) };
    let times: Vec<f64> = u_bar
        .snapshot_times()
        .into_iter()
        .filter(|&t| t <= cfg.t_end)
        .collect();
    integrate(
        cfg,
        n,
        u0.clone(),
        theta,
        f,
        &times,
        Multiplier::Prescribed(&lambda),
    )
}

/// Two distinct seeds sampled at `times`: the datum frozen in time and the
/// zero trajectory.
pub fn standard_seeds(
    u0: &Field,
    theta: &(impl Obstacle + ?Sized),
    n: f64,
    times: &[f64],
) -> Result<(Trajectory, Trajectory)> {
    Ok((
        Trajectory::stationary(u0, theta, n, times)?,
        Trajectory::stationary(&Field::zeros(*u0.grid()), theta, n, times)?,
    ))
}

/// `sup_t |a(t) - b(t)|_{L1}` over shared snapshot times.
pub fn sup_l1_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(OclError::Sampling(format!(
            "{} vs {} snapshots",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    let mut gap = 0.0_f64;
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if (sa.t - sb.t).abs() > 1e-12 * sa.t.abs().max(1.0) {
            return Err(OclError::Sampling(format!(
                "snapshot times differ: {} vs {}",
                sa.t, sb.t
            )));
        }
        gap = gap.max(sa.u.l1_distance(&sb.u)?);
    }
    Ok(gap)
}

/// Measures the contraction factor of `Phi` from two seeds and the decay of
/// `iterations` successive Picard iterates started at the first seed.
///
/// `cfg.t_end` is replaced by the horizon `T0` solving
/// `2 n T0 exp(2 R n T0) = 1/2`.
pub fn estimate_contraction(
    cfg: &SolverConfig,
    f: &FluxSpec,
    theta: &(impl Obstacle + ?Sized),
    u0: &Field,
    seeds: (&Trajectory, &Trajectory),
    iterations: usize,
) -> Result<PicardReport> {
    let r = PICARD_RADIUS;
    let t0 = contraction_horizon(cfg.n, r, 0.5)?;
    let cfg0 = SolverConfig { t_end: t0, ..*cfg };
    let denom = sup_l1_gap(seeds.0, seeds.1)?;
    if !(denom > 0.0) {
        return Err(OclError::DegenerateSeed(
            "seeds coincide at every snapshot".into(),
        ));
    }
    let v1 = picard_iterate(seeds.0, &cfg0, f, theta, u0)?;
    let v2 = picard_iterate(seeds.1, &cfg0, f, theta, u0)?;
    let k_hat = sup_l1_gap(&v1, &v2)? / denom;

    let mut distances = Vec::with_capacity(iterations);
    let mut prev = v1;
    distances.push(sup_l1_gap(&prev, &restrict_times(seeds.0, &prev)?)?);
    for _ in 1..iterations {
        let next = picard_iterate(&prev, &cfg0, f, theta, u0)?;
        distances.push(sup_l1_gap(&next, &prev)?);
        prev = next;
    }
    Ok(PicardReport {
        t0,
        k_hat,
        iterate_distances: distances,
        r,
    })
}

/// The snapshots of `traj` at the snapshot times of `like`.
fn restrict_times(traj: &Trajectory, like: &Trajectory) -> Result<Trajectory> {
    let mut out = Trajectory::new(*traj.grid());
    for s in &like.snapshots {
        let hit = traj
            .snapshots
            .iter()
            .find(|x| (x.t - s.t).abs() <= 1e-12 * s.t.abs().max(1.0))
            .ok_or_else(|| OclError::Sampling(format!("seed has no snapshot at t = {}", s.t)))?;
        out.push_snapshot(s.t, hit.u.clone())?;
    }
    Ok(out)
}
