//! Uniform 1-D grids, cell-averaged fields and the discrete norms every
//! estimate is phrased in.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{OclError, Result};

/// A truncated uniform mesh on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 4;

    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(OclError::Configuration(format!(
                "grid needs finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(OclError::Configuration(format!(
                "grid needs at least {} cells, got {n_cells}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    /// Grid on `[x_min, x_max]` whose spacing is as close as possible to (and
    /// never larger than) `dx`.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(OclError::Configuration(format!(
                "dx must be positive, got {dx}"
            )));
        }
        let cells = ((x_max - x_min) / dx - 1e-9).ceil().max(1.0) as usize;
        Self::new(x_min, x_max, cells)
    }

    #[inline]
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Left and right faces of cell `i`.
    #[inline]
    pub fn faces(&self, i: usize) -> (f64, f64) {
        let dx = self.dx();
        (self.x_min + i as f64 * dx, self.x_min + (i + 1) as f64 * dx)
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Kahan::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Running Neumaier accumulator behind [`compensated_sum`].
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Cell averages of a scalar quantity on a [`Grid1D`]. Every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(OclError::InvalidField(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(OclError::InvalidField(format!(
                "non-finite value {} in cell {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: Grid1D, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_cells()])
    }

    /// Samples `f` at cell centers.
    pub fn from_centers(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.centers().map(f).collect())
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(OclError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Discrete mass `sum_i u_i dx`.
    pub fn integrate(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.grid.dx()
    }

    /// `sum_i |u_{i+1} - u_i|` over interior faces.
    pub fn total_variation(&self) -> f64 {
        compensated_sum(self.values.windows(2).map(|w| (w[1] - w[0]).abs()))
    }

    pub fn l1_distance(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(compensated_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs()),
        ) * self.grid.dx())
    }

    pub fn l_inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn positive_part(&self) -> Field {
        self.map(|v| v.max(0.0))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    /// Rows `x_center,value`, 17 significant digits each.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,value")?;
        for (x, v) in self.grid.centers().zip(&self.values) {
            writeln!(out, "{},{}", fmt_f64(x), fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// Round-trip exact decimal text: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A scalar sampled at strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(OclError::InvalidArgument(format!(
                "time series with {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OclError::InvalidArgument(
                "time series times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(OclError::InvalidArgument(format!(
                    "time series push at t = {t} after t = {last}"
                )));
            }
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    /// Smallest value and the time it occurs.
    pub fn min_with_time(&self) -> Option<(f64, f64)> {
        self.iter()
            .reduce(|best, cur| if cur.1 < best.1 { cur } else { best })
            .map(|(t, v)| (v, t))
    }

    /// Linear interpolation; `t` must lie within the sampled span (a
    /// relative slack of 1e-12 is accepted at either end).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(OclError::Sampling("empty time series".into())),
        };
        let slack = 1e-12 * last.abs().max(1.0);
        if t < first - slack || t > last + slack {
            return Err(OclError::Sampling(format!(
                "t = {t} outside sampled span [{first}, {last}]"
            )));
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Ok(self.values[0]);
        }
        if k == self.times.len() {
            return Ok(self.values[k - 1]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(v0 + w * (v1 - v0))
    }
}
