//! Problem data: flux, obstacle, initial datum.

mod datum;
mod flux;
mod obstacle;
mod sign;

pub use datum::{normalize_mass, InitialData};
pub use flux::{Evaluated, FluxKind, FluxSpec};
pub use obstacle::{obstacle_operator, obstacle_operator_negative, Obstacle, ObstacleSpec};
pub use sign::RegularizedSign;

use crate::error::Result;
use crate::mesh::{Field, Grid1D};

/// Flux, obstacle and initial datum of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub flux: FluxSpec,
    pub obstacle: ObstacleSpec,
    pub datum: InitialData,
}

impl ProblemSpec {
    pub fn new(flux: FluxSpec, obstacle: ObstacleSpec, datum: InitialData) -> Result<Self> {
        obstacle.validate()?;
        datum.validate()?;
        Ok(Self {
            flux,
            obstacle,
            datum,
        })
    }

    /// Unit-mass cell averages of the datum.
    pub fn initial_field(&self, grid: &Grid1D) -> Result<Field> {
        self.datum.discretize(grid)
    }

    /// Obstacle samples at cell centers.
    pub fn obstacle_field(&self, grid: &Grid1D, t: f64) -> Field {
        sample_obstacle(&self.obstacle, grid, t)
    }
}

/// `theta(t, x_i)` at every cell center.
pub fn sample_obstacle(theta: &(impl Obstacle + ?Sized), grid: &Grid1D, t: f64) -> Field {
    Field::new(*grid, obstacle_values(theta, grid, t)).expect("obstacle evaluators are finite")
}

/// Raw cell-center samples; unlike [`sample_obstacle`] these may be infinite.
pub fn obstacle_values(theta: &(impl Obstacle + ?Sized), grid: &Grid1D, t: f64) -> Vec<f64> {
    grid.centers().map(|x| theta.value(t, x)).collect()
}

/// Smallest interval containing `support` padded by `M T + 6 sqrt(eps T)`,
/// the distance mass can travel by transport plus a viscous tail.
pub fn padded_domain(support: (f64, f64), m: f64, t_end: f64, eps: f64) -> (f64, f64) {
    let pad = m * t_end + 6.0 * (eps * t_end).sqrt();
    (support.0 - pad, support.1 + pad)
}
