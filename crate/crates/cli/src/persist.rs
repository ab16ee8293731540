//! CSV persistence of trajectories. Numbers are written with 17 significant
//! digits, so reading a file back reproduces the in-memory values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ocl_core::solver::{
    write_diagnostics_csv, write_snapshots_csv, Diagnostics, DIAGNOSTICS_HEADER, SNAPSHOT_HEADER,
};
use ocl_core::{Field, Grid1D, Obstacle, Trajectory};

pub fn write_snapshots(
    path: &Path,
    traj: &Trajectory,
    theta: &(impl Obstacle + ?Sized),
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_snapshots_csv(traj, theta, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_diagnostics_csv(traj, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Rows of a CSV file with the expected header, parsed as floats.
fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first != header {
        bail!(
            "{}: expected header `{header}`, found `{first}`",
            path.display()
        );
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let row = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: line {}", path.display(), i + 2))?;
        if row.len() != width {
            bail!(
                "{}: line {} has {} fields",
                path.display(),
                i + 2,
                row.len()
            );
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Snapshots only; the diagnostic series stay empty.
pub fn read_snapshots(path: &Path, grid: &Grid1D) -> Result<Trajectory> {
    let rows = read_rows(path, SNAPSHOT_HEADER)?;
    let n = grid.n_cells();
    if rows.len() % n != 0 {
        bail!(
            "{}: {} rows is not a multiple of {n} cells",
            path.display(),
            rows.len()
        );
    }
    let mut traj = Trajectory::new(*grid);
    for block in rows.chunks(n) {
        let t = block[0][0];
        for (row, x) in block.iter().zip(grid.centers()) {
            if row[0] != t || (row[1] - x).abs() > 1e-9 * grid.dx() {
                bail!(
                    "{}: snapshot at t = {t} does not match the grid",
                    path.display()
                );
            }
        }
        let u = Field::new(*grid, block.iter().map(|r| r[2]).collect())?;
        traj.push_snapshot(t, u)?;
    }
    Ok(traj)
}

/// Snapshots plus the per-step diagnostic series.
pub fn read_trajectory(snapshots: &Path, diagnostics: &Path, grid: &Grid1D) -> Result<Trajectory> {
    let mut traj = read_snapshots(snapshots, grid)?;
    for r in read_rows(diagnostics, DIAGNOSTICS_HEADER)? {
        let d = Diagnostics {
            mass: r[1],
            phi: r[3],
            tv: r[4],
            linf: r[5],
            alpha: r[6],
        };
        traj.record(r[0], r[2], d)?;
    }
    Ok(traj)
}
