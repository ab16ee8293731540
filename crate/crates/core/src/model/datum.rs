use serde::{Deserialize, Serialize};

use crate::error::{validation, OclError, Result};
use crate::mesh::{Field, Grid1D};

/// Families of nonnegative initial data. Amplitudes are irrelevant: data are
/// normalized to unit mass after discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Indicator of `[a, b]`.
    Box { a: f64, b: f64 },
    /// `(1 - s^2)^3` with `s = (x - center) / half_width`, zero for `|s| >= 1`.
    Bump { center: f64, half_width: f64 },
    /// `values[j]` on `[breaks[j], breaks[j + 1])`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Piecewise-linear interpolation of a table, zero outside it.
    CustomTable { x: Vec<f64>, u: Vec<f64> },
}

// 5-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::Box { a, b } => {
                if !(a < b) {
                    return Err(validation("box a < b", format!("[{a}, {b}]")));
                }
            }
            InitialData::Bump { half_width, .. } => {
                if !(*half_width > 0.0) {
                    return Err(validation("bump half_width > 0", half_width.to_string()));
                }
            }
            InitialData::PiecewiseConstant { breaks, values } => {
                if breaks.len() != values.len() + 1 || values.is_empty() {
                    return Err(validation(
                        "piecewise breaks = values + 1",
                        format!("{} breaks, {} values", breaks.len(), values.len()),
                    ));
                }
                if breaks.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(validation("increasing breaks", format!("{breaks:?}")));
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(validation("u0 >= 0", format!("{values:?}")));
                }
            }
            InitialData::CustomTable { x, u } => {
                if x.len() != u.len() || x.len() < 2 {
                    return Err(validation(
                        "table lengths",
                        format!("{} vs {}", x.len(), u.len()),
                    ));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(validation("increasing table abscissae", format!("{x:?}")));
                }
                if u.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(validation("u0 >= 0", format!("{u:?}")));
                }
            }
        }
        Ok(())
    }

    /// Closed interval outside which the datum vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            InitialData::Box { a, b } => (*a, *b),
            InitialData::Bump { center, half_width } => (center - half_width, center + half_width),
            InitialData::PiecewiseConstant { breaks, .. } => {
                (breaks[0], *breaks.last().expect("validated"))
            }
            InitialData::CustomTable { x, .. } => (x[0], *x.last().expect("validated")),
        }
    }

    /// Pointwise value (before normalization).
    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialData::Box { a, b } => {
                if x >= *a && x <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            InitialData::Bump { center, half_width } => {
                let s = (x - center) / half_width;
                if s.abs() < 1.0 {
                    (1.0 - s * s).powi(3)
                } else {
                    0.0
                }
            }
            InitialData::PiecewiseConstant { breaks, values } => {
                let k = breaks.partition_point(|&b| b <= x);
                if k == 0 || k > values.len() {
                    0.0
                } else {
                    values[k - 1]
                }
            }
            InitialData::CustomTable { x: xs, u } => {
                if x < xs[0] || x > *xs.last().expect("validated") {
                    return 0.0;
                }
                let k = xs.partition_point(|&b| b <= x).clamp(1, xs.len() - 1);
                let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                u[k - 1] + w * (u[k] - u[k - 1])
            }
        }
    }

    /// Cell averages on `grid`: exact for piecewise-constant families,
    /// per-cell Gauss-Legendre otherwise. Not normalized.
    pub fn cell_averages(&self, grid: &Grid1D) -> Result<Field> {
        self.validate()?;
        let dx = grid.dx();
        let values = (0..grid.n_cells())
            .map(|i| {
                let (l, r) = grid.faces(i);
                match self {
                    InitialData::Box { a, b } => overlap(l, r, *a, *b) / dx,
                    InitialData::PiecewiseConstant { breaks, values } => {
                        breaks
                            .windows(2)
                            .zip(values)
                            .map(|(w, v)| v * overlap(l, r, w[0], w[1]))
                            .sum::<f64>()
                            / dx
                    }
                    _ => {
                        let (mid, half) = (0.5 * (l + r), 0.5 * (r - l));
                        0.5 * GL_NODES
                            .iter()
                            .zip(GL_WEIGHTS)
                            .map(|(s, w)| w * self.value(mid + half * s))
                            .sum::<f64>()
                    }
                }
            })
            .collect();
        Field::new(*grid, values)
    }

    /// Unit-mass discretization on `grid`.
    pub fn discretize(&self, grid: &Grid1D) -> Result<Field> {
        normalize_mass(&self.cell_averages(grid)?)
    }
}

fn overlap(l: f64, r: f64, a: f64, b: f64) -> f64 {
    (r.min(b) - l.max(a)).max(0.0)
}

/// Rescales a nonnegative field to unit mass.
pub fn normalize_mass(u0: &Field) -> Result<Field> {
    if let Some(i) = u0.values().iter().position(|&v| v < 0.0) {
        return Err(OclError::DegenerateDatum(format!(
            "negative value {} in cell {i}",
            u0.values()[i]
        )));
    }
    let mass = u0.integrate();
    if !(mass > 0.0) {
        return Err(OclError::DegenerateDatum(format!(
            "mass {mass} is not positive"
        )));
    }
    let out = u0.map(|v| v / mass);
    // One correction pass absorbs the rounding of the division.
    let residual = out.integrate();
    Ok(out.map(|v| v / residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_of_mass_two_normalizes_to_unit_mass() {
        let grid = Grid1D::new(0.0, 4.0, 40).unwrap();
        let raw = InitialData::Box { a: 1.0, b: 3.0 }
            .cell_averages(&grid)
            .unwrap();
        assert!((raw.integrate() - 2.0).abs() < 1e-14);
        let u = normalize_mass(&raw).unwrap();
        assert!((u.integrate() - 1.0).abs() < 1e-14);
        for (a, b) in raw.values().iter().zip(u.values()) {
            assert!((a * 0.5 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_is_idempotent() {
        let grid = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let u = InitialData::Bump {
            center: 0.1,
            half_width: 1.3,
        }
        .discretize(&grid)
        .unwrap();
        let again = normalize_mass(&u).unwrap();
        assert!((again.integrate() - 1.0).abs() < 1e-14);
        assert!(u.l1_distance(&again).unwrap() < 1e-14);
    }

    #[test]
    fn negative_cells_are_degenerate() {
        let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
        let f = Field::new(grid, vec![1.0, -0.1, 0.5, 0.0]).unwrap();
        assert!(matches!(
            normalize_mass(&f),
            Err(OclError::DegenerateDatum(_))
        ));
        assert!(matches!(
            normalize_mass(&Field::zeros(grid)),
            Err(OclError::DegenerateDatum(_))
        ));
    }

    #[test]
    fn bump_cell_averages_match_closed_form_mass() {
        let grid = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let raw = InitialData::Bump {
            center: 0.0,
            half_width: 1.0,
        }
        .cell_averages(&grid)
        .unwrap();
        // int_{-1}^{1} (1 - s^2)^3 ds = 32/35
        assert!((raw.integrate() - 32.0 / 35.0).abs() < 1e-10);
    }

    #[test]
    fn piecewise_and_table_families() {
        let grid = Grid1D::new(0.0, 3.0, 30).unwrap();
        let pc = InitialData::PiecewiseConstant {
            breaks: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0],
        };
        assert!((pc.cell_averages(&grid).unwrap().integrate() - 4.0).abs() < 1e-14);
        let table = InitialData::CustomTable {
            x: vec![0.0, 1.0, 2.0],
            u: vec![0.0, 2.0, 0.0],
        };
        assert!((table.cell_averages(&grid).unwrap().integrate() - 2.0).abs() < 1e-12);
        assert!(InitialData::CustomTable {
            x: vec![0.0, 1.0],
            u: vec![0.0, -1.0]
        }
        .validate()
        .is_err());
    }
}
