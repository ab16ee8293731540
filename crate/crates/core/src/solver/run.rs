use super::config::SolverConfig;
use super::scheme::{advance, stable_dt, Multiplier, SolverState, Workspace};
use crate::error::{OclError, Result};
use crate::mesh::{Field, Grid1D, Kahan, TimeSeries};
use crate::model::{obstacle_values, FluxSpec, Obstacle};

/// A field recorded at an output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub steps: usize,
    /// Steps retried with a halved `dt` after a stiffness error.
    pub rejected_steps: usize,
    pub boundary_leak: f64,
    /// Cell updates that left the declared flux range.
    pub clamped_cells: usize,
    pub max_dt_lambda: f64,
}

/// Snapshots and per-step diagnostics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid1D,
    pub snapshots: Vec<Snapshot>,
    pub lambda_series: TimeSeries,
    pub mass_series: TimeSeries,
    pub phi_series: TimeSeries,
    pub tv_series: TimeSeries,
    pub linf_series: TimeSeries,
    pub alpha_series: TimeSeries,
    pub stats: RunStats,
}

/// Per-time diagnostics of one field against one obstacle sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub mass: f64,
    /// `int (u - theta)^+`.
    pub phi: f64,
    pub tv: f64,
    pub linf: f64,
    /// `int_{u < theta} u`.
    pub alpha: f64,
}

impl Diagnostics {
    pub fn of(u: &[f64], theta: &[f64], dx: f64) -> Self {
        let (mut mass, mut phi, mut alpha) = (Kahan::default(), Kahan::default(), Kahan::default());
        let (mut tv, mut linf) = (0.0, 0.0_f64);
        for (i, (&v, &th)) in u.iter().zip(theta).enumerate() {
            mass.add(v);
            phi.add((v - th).max(0.0));
            alpha.add(if v < th { v } else { 0.0 });
            linf = linf.max(v.abs());
            if i > 0 {
                tv += (v - u[i - 1]).abs();
            }
        }
        Self {
            mass: mass.total() * dx,
            phi: phi.total() * dx,
            tv,
            linf,
            alpha: alpha.total() * dx,
        }
    }
}

impl Trajectory {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            snapshots: Vec::new(),
            lambda_series: TimeSeries::new(),
            mass_series: TimeSeries::new(),
            phi_series: TimeSeries::new(),
            tv_series: TimeSeries::new(),
            linf_series: TimeSeries::new(),
            alpha_series: TimeSeries::new(),
            stats: RunStats::default(),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn record(&mut self, t: f64, lambda: f64, d: Diagnostics) -> Result<()> {
        self.lambda_series.push(t, lambda)?;
        self.mass_series.push(t, d.mass)?;
        self.phi_series.push(t, d.phi)?;
        self.tv_series.push(t, d.tv)?;
        self.linf_series.push(t, d.linf)?;
        self.alpha_series.push(t, d.alpha)
    }

    pub fn push_snapshot(&mut self, t: f64, u: Field) -> Result<()> {
        u.ensure_same_grid(&Field::zeros(self.grid))?;
        if let Some(last) = self.snapshots.last() {
            if !(t > last.t) {
                return Err(OclError::Sampling(format!(
                    "snapshot time {t} does not follow {}",
                    last.t
                )));
            }
        }
        self.snapshots.push(Snapshot { t, u });
        Ok(())
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn final_field(&self) -> Option<&Field> {
        self.snapshots.last().map(|s| &s.u)
    }

    /// A trajectory that holds `u` fixed at every time in `times`, with
    /// diagnostics against `theta`. Used to seed Picard iterations.
    pub fn stationary(
        u: &Field,
        theta: &(impl Obstacle + ?Sized),
        n: f64,
        times: &[f64],
    ) -> Result<Self> {
        let mut traj = Self::new(*u.grid());
        for &t in times {
            let th = obstacle_values(theta, u.grid(), t);
            let d = Diagnostics::of(u.values(), &th, u.grid().dx());
            traj.record(t, n * d.phi, d)?;
            traj.push_snapshot(t, u.clone())?;
        }
        Ok(traj)
    }
}

/// `count` equally spaced times from 0 to `t_end` inclusive.
pub fn uniform_times(t_end: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| {
            if k + 1 == count {
                t_end
            } else {
                t_end * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

fn check_output_times(times: &[f64], t_end: f64) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OclError::InvalidArgument(
            "output times must increase".into(),
        ));
    }
    if let (Some(&a), Some(&b)) = (times.first(), times.last()) {
        if a < 0.0 || b > t_end {
            return Err(OclError::InvalidArgument(format!(
                "output times [{a}, {b}] leave [0, {t_end}]"
            )));
        }
    }
    Ok(())
}

/// Shared time loop.
pub(crate) fn integrate(
    cfg: &SolverConfig,
    n: f64,
    u0: Field,
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    output_times: &[f64],
    multiplier: Multiplier<'_>,
) -> Result<Trajectory> {
    check_output_times(output_times, cfg.t_end)?;
    let grid = *u0.grid();
    let dx = grid.dx();
    let mut traj = Trajectory::new(grid);
    let mut ws = Workspace::new(grid.n_cells());

    let theta0 = obstacle_values(theta, &grid, 0.0);
    let d0 = Diagnostics::of(u0.values(), &theta0, dx);
    let lambda0 = match multiplier {
        Multiplier::Nonlocal { .. } => n * d0.phi,
        Multiplier::Prescribed(lam) => lam(0.0)?,
    };
    traj.record(0.0, lambda0, d0)?;
    let mut next_out = 0;
    while next_out < output_times.len() && output_times[next_out] <= 0.0 {
        traj.push_snapshot(0.0, u0.clone())?;
        next_out += 1;
    }

    let mut state = SolverState::initial(u0);
    let t_end = cfg.t_end;
    while state.t < t_end {
        let target = output_times
            .get(next_out)
            .copied()
            .unwrap_or(t_end)
            .min(t_end);
        let mut dt = stable_dt(&state, cfg, f)?;
        // Land exactly on output times; avoid a sliver step just before one.
        let remaining = target - state.t;
        if dt >= remaining || remaining - dt < 1e-9 * remaining {
            dt = remaining;
        }
        let mut halvings = 0;
        let outcome = loop {
            match advance(&state, dt, cfg, n, f, theta, multiplier, &mut ws) {
                Ok(o) => break o,
                Err(OclError::Stiffness { .. }) if halvings < 40 => {
                    dt *= 0.5;
                    halvings += 1;
                    traj.stats.rejected_steps += 1;
                }
                Err(e) => return Err(e),
            }
        };
        let landed = dt == remaining;
        state = outcome.state;
        if landed {
            state.t = target;
        }
        traj.stats.steps += 1;
        traj.stats.boundary_leak += outcome.leaked;
        traj.stats.clamped_cells += outcome.clamped;
        traj.stats.max_dt_lambda = traj.stats.max_dt_lambda.max(dt * state.lambda_last);
        if traj.stats.boundary_leak > cfg.boundary_leak_tol {
            return Err(OclError::BoundaryLeak {
                t: state.t,
                leaked: traj.stats.boundary_leak,
                tolerance: cfg.boundary_leak_tol,
            });
        }
        let d = Diagnostics::of(state.u.values(), &outcome.theta_new, dx);
        traj.record(state.t, state.lambda_last, d)?;
        while next_out < output_times.len() && output_times[next_out] <= state.t {
            traj.push_snapshot(state.t, state.u.clone())?;
            next_out += 1;
        }
    }
    Ok(traj)
}

fn check_datum(u0: &Field, unit_mass: bool) -> Result<()> {
    if u0.min_value() < 0.0 {
        return Err(OclError::DegenerateDatum(format!(
            "initial datum has negative value {}",
            u0.min_value()
        )));
    }
    if unit_mass && (u0.integrate() - 1.0).abs() > 1e-12 {
        return Err(OclError::DegenerateDatum(format!(
            "initial mass {} is not 1",
            u0.integrate()
        )));
    }
    Ok(())
}

/// Runs the penalized viscous problem to `cfg.t_end`.
pub fn run(
    cfg: &SolverConfig,
    u0: &Field,
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    output_times: &[f64],
) -> Result<Trajectory> {
    cfg.validate()?;
    check_datum(u0, true)?;
    let mass = u0.integrate();
    integrate(
        cfg,
        cfg.n,
        u0.clone(),
        theta,
        f,
        output_times,
        Multiplier::Nonlocal { mass },
    )
}

/// Obstacle placeholder for the unpenalized problem.
struct Unconstrained;

impl Obstacle for Unconstrained {
    fn value(&self, _: f64, _: f64) -> f64 {
        f64::INFINITY
    }
    fn d_t(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn d_x(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn d_xx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn lower_bound(&self) -> f64 {
        f64::INFINITY
    }
}

/// The same scheme with no penalty and no multiplier.
pub fn solve_homogeneous(
    v0: &Field,
    f: &FluxSpec,
    eps: f64,
    t_end: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    let cfg = SolverConfig {
        n: 0.0,
        eps,
        cfl: 0.45,
        t_end,
        splitting: Default::default(),
        reaction_dt_cap: 0.5,
        boundary_leak_tol: 1e-10,
    };
    solve_homogeneous_with(&cfg, v0, f, output_times)
}

/// [`solve_homogeneous`] with the remaining solver settings taken from `cfg`;
/// `cfg.n` is ignored.
pub fn solve_homogeneous_with(
    cfg: &SolverConfig,
    v0: &Field,
    f: &FluxSpec,
    output_times: &[f64],
) -> Result<Trajectory> {
    cfg.validate_common()?;
    check_datum(v0, false)?;
    let mass = v0.integrate();
    integrate(
        cfg,
        0.0,
        v0.clone(),
        &Unconstrained,
        f,
        output_times,
        Multiplier::Nonlocal { mass },
    )
}
