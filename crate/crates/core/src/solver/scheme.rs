use super::config::{SolverConfig, Splitting};
use crate::error::{OclError, Result};
use crate::mesh::{compensated_sum, Field};
use crate::model::{obstacle_values, FluxSpec, Obstacle};

/// Local Lax-Friedrichs flux.
#[inline]
pub fn numerical_flux(f: &FluxSpec, u_left: f64, u_right: f64) -> f64 {
    let a = f.max_speed(u_left.min(u_right), u_left.max(u_right));
    0.5 * (f.f(u_left) + f.f(u_right)) - 0.5 * a * (u_right - u_left)
}

/// `n * int (u - theta)^+ dx`.
pub fn compute_lambda(u: &Field, theta_t: &Field, n: f64) -> Result<f64> {
    u.ensure_same_grid(theta_t)?;
    Ok(n * excess(u.values(), theta_t.values()) * u.grid().dx())
}

fn excess(u: &[f64], theta: &[f64]) -> f64 {
    compensated_sum(u.iter().zip(theta).map(|(u, th)| (u - th).max(0.0)))
}

/// Time, field and most recent multiplier of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: Field,
    pub lambda_last: f64,
    pub step_index: usize,
}

impl SolverState {
    pub fn initial(u0: Field) -> Self {
        Self {
            t: 0.0,
            u: u0,
            lambda_last: 0.0,
            step_index: 0,
        }
    }
}

/// Explicit time step `cfl / (M / dx + 2 eps / dx^2)`, further limited so
/// that `dt * lambda_last <= reaction_dt_cap`. `M` is the largest wave speed
/// over the range of the current state. Infinite when nothing constrains it.
pub fn stable_dt(state: &SolverState, cfg: &SolverConfig, f: &FluxSpec) -> Result<f64> {
    let dx = state.u.grid().dx();
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(OclError::Configuration(format!(
            "degenerate grid spacing {dx}"
        )));
    }
    let (lo, hi) = min_max(state.u.values());
    let m = f.max_speed(lo, hi);
    let rate = m / dx + 2.0 * cfg.eps / (dx * dx);
    let mut dt = if rate > 0.0 {
        cfg.cfl / rate
    } else {
        f64::INFINITY
    };
    if state.lambda_last > 0.0 {
        dt = dt.min(cfg.reaction_dt_cap / state.lambda_last);
    }
    Ok(dt)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// How the multiplier of the reaction stage is obtained.
#[derive(Clone, Copy)]
pub(crate) enum Multiplier<'a> {
    /// `lambda = n int (u_new - theta)^+`, solved together with `u_new` so
    /// that the total mass stays at `mass`.
    Nonlocal { mass: f64 },
    /// `lambda(t)` supplied by the caller.
    Prescribed(&'a (dyn Fn(f64) -> Result<f64> + Sync)),
}

/// Scratch output of one stage-A application.
pub(crate) struct TransportOutcome {
    /// Mass that crossed the truncated boundary (always counted positive).
    pub leaked: f64,
    /// Cells whose value lies outside the declared flux range.
    pub clamped: usize,
}

/// Explicit LLF transport plus centered diffusion with zero ghost cells.
pub(crate) fn transport_diffusion(
    u: &[f64],
    out: &mut Vec<f64>,
    fluxes: &mut Vec<f64>,
    f: &FluxSpec,
    eps: f64,
    dt: f64,
    dx: f64,
) -> TransportOutcome {
    let n = u.len();
    // |f'| of every shipped family is monotone or convex on the clamped
    // range, so its sup over [lo, hi] is attained at an endpoint and the
    // per-cell values can be reused by both adjacent faces.
    let cell = |v: f64| (f.f(v), f.max_speed(v, v));
    let llf = |(fl, sl): (f64, f64), (fr, sr): (f64, f64), ul: f64, ur: f64| {
        0.5 * (fl + fr) - 0.5 * sl.max(sr) * (ur - ul)
    };
    let zero = cell(0.0);
    fluxes.clear();
    let mut prev = cell(u[0]);
    fluxes.push(llf(zero, prev, 0.0, u[0]));
    for i in 0..n - 1 {
        let next = cell(u[i + 1]);
        fluxes.push(llf(prev, next, u[i], u[i + 1]));
        prev = next;
    }
    fluxes.push(llf(prev, zero, u[n - 1], 0.0));
    let (r, d) = (dt / dx, eps * dt / (dx * dx));
    out.clear();
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i + 1 == n { 0.0 } else { u[i + 1] };
        out.push(u[i] - r * (fluxes[i + 1] - fluxes[i]) + d * (right - 2.0 * u[i] + left));
    }
    let leaked =
        dt * (fluxes[n].max(0.0) + (-fluxes[0]).max(0.0)) + eps * dt / dx * (u[0] + u[n - 1]);
    let (_, hi) = f.declared_range();
    let clamped = out.iter().filter(|&&v| v < 0.0 || v > hi).count();
    TransportOutcome { leaked, clamped }
}

/// Cellwise implicit Euler for `u = u* + h (lambda u - n (u - theta)^+)`.
/// The below-obstacle branch wins ties.
#[inline]
pub(crate) fn reaction_cell(u_star: f64, theta: f64, h: f64, n: f64, lambda: f64) -> f64 {
    let shrink = 1.0 - h * lambda;
    if u_star <= theta * shrink {
        u_star / shrink
    } else {
        (u_star + h * n * theta) / (1.0 + h * n - h * lambda)
    }
}

/// `g_i(lambda) = (u_i(lambda) - theta_i)^+` together with its derivative.
#[inline]
fn excess_and_slope(u_star: f64, theta: f64, h: f64, n: f64, lambda: f64) -> (f64, f64) {
    let num = u_star - theta * (1.0 - h * lambda);
    if num <= 0.0 {
        return (0.0, 0.0);
    }
    let den = 1.0 + h * n - h * lambda;
    let g = num / den;
    (g, h * (theta + g) / den)
}

/// Smallest root of `n dx sum_i g_i(lambda) + c - lambda` on `[0, 1/h)`,
/// where `c = (mass - m*) / h` restores the target mass of the pre-reaction
/// state `u*`.
///
/// With `c = 0` the root is exactly `lambda = n int (u_new - theta)^+` and
/// the mass balance reads `m_new - 1 = (m* - 1) / (1 - h lambda)`: any
/// round-off in `m*` is amplified by every active step. The shift `c`,
/// which is of round-off size, cancels that amplification.
///
/// The left side is convex in `lambda`, so Newton's method increases
/// monotonically to the smallest root once the residual is nonnegative.
/// Without contact (`u* <= theta` everywhere) the multiplier is exactly 0.
pub(crate) fn solve_nonlocal_lambda(
    u_star: &[f64],
    theta: &[f64],
    h: f64,
    n: f64,
    dx: f64,
    t: f64,
    mass: f64,
) -> Result<f64> {
    if n == 0.0 || u_star.iter().zip(theta).all(|(u, th)| u <= th) {
        return Ok(0.0);
    }
    let shift = (mass - compensated_sum(u_star.iter().copied()) * dx) / h;
    let residual = |lambda: f64| {
        let mut s = 0.0;
        let mut ds = 0.0;
        for (&u, &th) in u_star.iter().zip(theta) {
            let (g, dg) = excess_and_slope(u, th, h, n, lambda);
            s += g;
            ds += dg;
        }
        (n * dx * s + shift - lambda, n * dx * ds - 1.0)
    };
    let stiff = |lambda: f64| OclError::Stiffness {
        t,
        dt: h,
        product: h * lambda,
    };
    let mut lambda = 0.0;
    if residual(0.0).0 < 0.0 {
        // Round-off pushed the root below zero.
        return Ok(0.0);
    }
    for _ in 0..200 {
        let (r, dr) = residual(lambda);
        if r <= 1e-15 * lambda.max(1.0) {
            return Ok(lambda);
        }
        if dr >= 0.0 {
            return Err(stiff(lambda));
        }
        let next = lambda - r / dr;
        if next * h >= 1.0 || !next.is_finite() {
            return Err(stiff(next));
        }
        if next <= lambda {
            return Ok(lambda);
        }
        lambda = next;
    }
    Ok(lambda)
}

/// Applies the reaction stage of length `h` in place; returns the
/// multiplier used. Fails with a stiffness error when `h * lambda > cap`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn reaction(
    u: &mut [f64],
    theta: &[f64],
    h: f64,
    n: f64,
    dx: f64,
    t: f64,
    cap: f64,
    multiplier: Multiplier<'_>,
) -> Result<f64> {
    let lambda = match multiplier {
        Multiplier::Nonlocal { mass } => solve_nonlocal_lambda(u, theta, h, n, dx, t, mass)?,
        Multiplier::Prescribed(lam) => lam(t)?,
    };
    // `lambda = 1/h` is always a spurious root of the nonlocal equation, and
    // mass errors are amplified by `1 / (1 - h lambda)`; both call for a
    // shorter step rather than a solve near the pole.
    if !(lambda >= 0.0) || h * lambda > cap {
        return Err(OclError::Stiffness {
            t,
            dt: h,
            product: h * lambda,
        });
    }
    for (v, &th) in u.iter_mut().zip(theta) {
        let mut next = reaction_cell(*v, th, h, n, lambda);
        // Round-off in the explicit stage can leave denormal-scale negatives.
        if next < 0.0 && next > -1e-14 {
            next = 0.0;
        }
        if !(next.is_finite() && next >= 0.0) {
            return Err(OclError::InternalInvariant(format!(
                "reaction produced {next} from u* = {v}, theta = {th}"
            )));
        }
        *v = next;
    }
    Ok(lambda)
}

/// Result of one full splitting step.
pub(crate) struct StepOutcome {
    pub state: SolverState,
    pub theta_new: Vec<f64>,
    pub leaked: f64,
    pub clamped: usize,
}

pub(crate) struct Workspace {
    buf: Vec<f64>,
    fluxes: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            buf: Vec::with_capacity(n),
            fluxes: Vec::with_capacity(n + 1),
        }
    }
}

/// Advances `state` by `dt`, sampling the obstacle at each substep end.
#[allow(clippy::too_many_arguments)]
pub(crate) fn advance(
    state: &SolverState,
    dt: f64,
    cfg: &SolverConfig,
    n: f64,
    f: &FluxSpec,
    theta: &(impl Obstacle + ?Sized),
    multiplier: Multiplier<'_>,
    ws: &mut Workspace,
) -> Result<StepOutcome> {
    let grid = *state.u.grid();
    let dx = grid.dx();
    let t_new = state.t + dt;
    let mut u = state.u.values().to_vec();
    let (lambda, leaked, clamped, theta_new) = match cfg.splitting {
        Splitting::Lie => {
            let a = transport_diffusion(&u, &mut ws.buf, &mut ws.fluxes, f, cfg.eps, dt, dx);
            std::mem::swap(&mut u, &mut ws.buf);
            let th = obstacle_values(theta, &grid, t_new);
            let lambda = reaction(
                &mut u,
                &th,
                dt,
                n,
                dx,
                t_new,
                cfg.reaction_dt_cap,
                multiplier,
            )?;
            (lambda, a.leaked, a.clamped, th)
        }
        Splitting::Strang => {
            let t_half = state.t + 0.5 * dt;
            let th_half = obstacle_values(theta, &grid, t_half);
            reaction(
                &mut u,
                &th_half,
                0.5 * dt,
                n,
                dx,
                t_half,
                cfg.reaction_dt_cap,
                multiplier,
            )?;
            let a = transport_diffusion(&u, &mut ws.buf, &mut ws.fluxes, f, cfg.eps, dt, dx);
            std::mem::swap(&mut u, &mut ws.buf);
            let th = obstacle_values(theta, &grid, t_new);
            let lambda = reaction(
                &mut u,
                &th,
                0.5 * dt,
                n,
                dx,
                t_new,
                cfg.reaction_dt_cap,
                multiplier,
            )?;
            (lambda, a.leaked, a.clamped, th)
        }
    };
    Ok(StepOutcome {
        state: SolverState {
            t: t_new,
            u: Field::new(grid, u)?,
            lambda_last: lambda,
            step_index: state.step_index + 1,
        },
        theta_new,
        leaked,
        clamped,
    })
}

/// One step of the penalized scheme with `dt` from [`stable_dt`], clipped to
/// the end time.
pub fn step(
    state: &SolverState,
    cfg: &SolverConfig,
    f: &FluxSpec,
    theta: &(impl Obstacle + ?Sized),
) -> Result<SolverState> {
    let dt = stable_dt(state, cfg, f)?.min(cfg.t_end - state.t);
    if !(dt > 0.0) {
        return Err(OclError::InvalidArgument(format!(
            "no time left to step at t = {}",
            state.t
        )));
    }
    let mut ws = Workspace::new(state.u.len());
    let multiplier = Multiplier::Nonlocal {
        mass: state.u.integrate(),
    };
    advance(state, dt, cfg, cfg.n, f, theta, multiplier, &mut ws).map(|o| o.state)
}
