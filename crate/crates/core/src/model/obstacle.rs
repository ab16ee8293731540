use serde::{Deserialize, Serialize};

use super::flux::FluxSpec;
use crate::error::{validation, Result};
use crate::mesh::{compensated_sum, Grid1D};

/// An obstacle `theta(t, x)` with closed-form derivatives and a positive
/// lower bound.
pub trait Obstacle: Send + Sync {
    fn value(&self, t: f64, x: f64) -> f64;
    fn d_t(&self, t: f64, x: f64) -> f64;
    fn d_x(&self, t: f64, x: f64) -> f64;
    fn d_xx(&self, t: f64, x: f64) -> f64;
    fn lower_bound(&self) -> f64;
}

/// `H(theta) = d_t theta + d_x f(theta)` at `(t, x)`.
#[inline]
pub fn obstacle_operator(theta: &(impl Obstacle + ?Sized), f: &FluxSpec, t: f64, x: f64) -> f64 {
    theta.d_t(t, x) + f.f_prime(theta.value(t, x)) * theta.d_x(t, x)
}

/// `max(-H(theta), 0)`.
#[inline]
pub fn obstacle_operator_negative(
    theta: &(impl Obstacle + ?Sized),
    f: &FluxSpec,
    t: f64,
    x: f64,
) -> f64 {
    (-obstacle_operator(theta, f, t, x)).max(0.0)
}

/// The shipped obstacle families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    /// `theta = value`.
    Constant { value: f64 },
    /// A Gaussian dip of the given depth whose bottom sits at `floor` and
    /// travels as `center + speed * t`:
    /// `theta = floor + depth * (1 - exp(-((x - center - speed t) / width)^2))`.
    MovingDip {
        floor: f64,
        depth: f64,
        center: f64,
        speed: f64,
        width: f64,
    },
    /// A smooth monotone step from `floor` rising (or, for negative slope,
    /// falling) by `|slope| * (b - a)` across `window = [a, b]`, with
    /// maximal gradient `slope` at the window midpoint.
    Ramp {
        floor: f64,
        slope: f64,
        window: [f64; 2],
    },
    /// `theta = floor + curvature * (x - center)^2`. Its derivatives are not
    /// globally integrable; regularity is only meaningful on a truncated box.
    Parabola {
        floor: f64,
        curvature: f64,
        center: f64,
    },
}

impl ObstacleSpec {
    /// Checks the family parameters, including `theta >= theta_lower > 0`.
    pub fn validate(&self) -> Result<()> {
        let lb = self.lower_bound();
        if !(lb.is_finite() && lb > 0.0) {
            return Err(validation(
                "theta >= theta_lower > 0",
                format!("obstacle lower bound is {lb}"),
            ));
        }
        match *self {
            ObstacleSpec::Constant { .. } => Ok(()),
            ObstacleSpec::MovingDip {
                depth,
                center,
                speed,
                width,
                ..
            } => {
                if !(depth.is_finite() && depth >= 0.0) {
                    return Err(validation("dip depth >= 0", format!("depth = {depth}")));
                }
                if !(width.is_finite() && width > 0.0) {
                    return Err(validation("dip width > 0", format!("width = {width}")));
                }
                if !(center.is_finite() && speed.is_finite()) {
                    return Err(validation(
                        "finite dip motion",
                        format!("{center}, {speed}"),
                    ));
                }
                Ok(())
            }
            ObstacleSpec::Ramp { slope, window, .. } => {
                if !slope.is_finite() || !(window[0] < window[1]) {
                    return Err(validation(
                        "ramp window a < b and finite slope",
                        format!("slope = {slope}, window = {window:?}"),
                    ));
                }
                Ok(())
            }
            ObstacleSpec::Parabola {
                curvature, center, ..
            } => {
                if !(curvature.is_finite() && curvature >= 0.0 && center.is_finite()) {
                    return Err(validation(
                        "parabola curvature >= 0",
                        format!("curvature = {curvature}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Minimum of `theta` over a `(t, x)` lattice on `[0, t_end] x grid`.
    pub fn sampled_minimum(&self, grid: &Grid1D, t_end: f64, n_times: usize) -> f64 {
        let mut min = f64::INFINITY;
        for k in 0..=n_times {
            let t = t_end * k as f64 / n_times.max(1) as f64;
            for x in grid.centers() {
                min = min.min(self.value(t, x));
            }
        }
        min
    }

    /// Checks `theta >= theta_lower` on the sampled lattice (to 1e-12) and
    /// continuity of `t -> int_grid theta(t, x) dx` by finite differencing.
    pub fn validate_on(&self, grid: &Grid1D, t_end: f64) -> Result<()> {
        self.validate()?;
        let min = self.sampled_minimum(grid, t_end, 64);
        if min < self.lower_bound() - 1e-12 {
            return Err(validation(
                "theta >= theta_lower > 0",
                format!("sampled minimum {min} below {}", self.lower_bound()),
            ));
        }
        let mass = |t: f64| compensated_sum(grid.centers().map(|x| self.value(t, x))) * grid.dx();
        let jump = |h: f64| {
            let steps = (t_end / h).round().max(1.0) as usize;
            (0..steps)
                .map(|k| (mass((k + 1) as f64 * h) - mass(k as f64 * h)).abs())
                .fold(0.0_f64, f64::max)
        };
        let h = t_end.max(1e-6) / 32.0;
        let (coarse, fine) = (jump(h), jump(h / 2.0));
        let scale = mass(0.0).abs().max(1.0);
        if fine > 1e-12 * scale && fine > 0.75 * coarse {
            return Err(validation(
                "t -> int_K theta continuous",
                format!("increments do not shrink under refinement ({coarse} -> {fine})"),
            ));
        }
        Ok(())
    }

    /// `sup_t int (|d_t theta| + |d_x theta| + |d_xx theta|) dx` on the
    /// truncated box, a proxy for the global derivative budget.
    pub fn derivative_budget(&self, grid: &Grid1D, t_end: f64, n_times: usize) -> f64 {
        (0..=n_times)
            .map(|k| {
                let t = t_end * k as f64 / n_times.max(1) as f64;
                compensated_sum(
                    grid.centers().map(|x| {
                        self.d_t(t, x).abs() + self.d_x(t, x).abs() + self.d_xx(t, x).abs()
                    }),
                ) * grid.dx()
            })
            .fold(0.0, f64::max)
    }
}

impl Obstacle for ObstacleSpec {
    #[inline]
    fn value(&self, t: f64, x: f64) -> f64 {
        match *self {
            ObstacleSpec::Constant { value } => value,
            ObstacleSpec::MovingDip {
                floor,
                depth,
                center,
                speed,
                width,
            } => {
                let s = (x - center - speed * t) / width;
                floor + depth * (1.0 - (-s * s).exp())
            }
            ObstacleSpec::Ramp {
                floor,
                slope,
                window,
            } => {
                let (height, z) = ramp_params(slope, window, x);
                floor + 0.5 * height * (1.0 + slope.signum() * z.tanh())
            }
            ObstacleSpec::Parabola {
                floor,
                curvature,
                center,
            } => floor + curvature * (x - center).powi(2),
        }
    }

    #[inline]
    fn d_t(&self, t: f64, x: f64) -> f64 {
        match *self {
            ObstacleSpec::MovingDip { speed, .. } => -speed * self.d_x(t, x),
            _ => 0.0,
        }
    }

    #[inline]
    fn d_x(&self, t: f64, x: f64) -> f64 {
        match *self {
            ObstacleSpec::Constant { .. } => 0.0,
            ObstacleSpec::MovingDip {
                depth,
                center,
                speed,
                width,
                ..
            } => {
                let s = (x - center - speed * t) / width;
                depth * (-s * s).exp() * 2.0 * s / width
            }
            ObstacleSpec::Ramp { slope, window, .. } => {
                let (height, z) = ramp_params(slope, window, x);
                let half = 0.5 * (window[1] - window[0]);
                let sech2 = 1.0 - z.tanh().powi(2);
                slope.signum() * 0.5 * height / half * sech2
            }
            ObstacleSpec::Parabola {
                curvature, center, ..
            } => 2.0 * curvature * (x - center),
        }
    }

    #[inline]
    fn d_xx(&self, t: f64, x: f64) -> f64 {
        match *self {
            ObstacleSpec::Constant { .. } => 0.0,
            ObstacleSpec::MovingDip {
                depth,
                center,
                speed,
                width,
                ..
            } => {
                let s = (x - center - speed * t) / width;
                depth * (-s * s).exp() * 2.0 * (1.0 - 2.0 * s * s) / (width * width)
            }
            ObstacleSpec::Ramp { slope, window, .. } => {
                let (height, z) = ramp_params(slope, window, x);
                let half = 0.5 * (window[1] - window[0]);
                let th = z.tanh();
                -slope.signum() * height / (half * half) * (1.0 - th * th) * th
            }
            ObstacleSpec::Parabola { curvature, .. } => 2.0 * curvature,
        }
    }

    #[inline]
    fn lower_bound(&self) -> f64 {
        match *self {
            ObstacleSpec::Constant { value } => value,
            ObstacleSpec::MovingDip { floor, .. }
            | ObstacleSpec::Ramp { floor, .. }
            | ObstacleSpec::Parabola { floor, .. } => floor,
        }
    }
}

/// `(total rise, scaled coordinate)` of a ramp.
#[inline]
fn ramp_params(slope: f64, window: [f64; 2], x: f64) -> (f64, f64) {
    let half = 0.5 * (window[1] - window[0]);
    let mid = 0.5 * (window[0] + window[1]);
    (slope.abs() * 2.0 * half, (x - mid) / half)
}
