use std::io::{self, Write};

use super::run::Trajectory;
use crate::mesh::fmt_f64;
use crate::model::Obstacle;

pub const SNAPSHOT_HEADER: &str = "t,x,u,theta";
pub const DIAGNOSTICS_HEADER: &str = "t,mass,lambda,phi,tv,linf,alpha";

/// One row per (snapshot, cell).
pub fn write_snapshots_csv<W: Write>(
    traj: &Trajectory,
    theta: &(impl Obstacle + ?Sized),
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    for s in &traj.snapshots {
        for (x, u) in traj.grid().centers().zip(s.u.values()) {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(x),
                fmt_f64(*u),
                fmt_f64(theta.value(s.t, x))
            )?;
        }
    }
    Ok(())
}

/// One row per recorded step.
pub fn write_diagnostics_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    let series = [
        &traj.mass_series,
        &traj.lambda_series,
        &traj.phi_series,
        &traj.tv_series,
        &traj.linf_series,
        &traj.alpha_series,
    ];
    for (k, t) in traj.mass_series.times().iter().enumerate() {
        write!(out, "{}", fmt_f64(*t))?;
        for s in series {
            write!(out, ",{}", fmt_f64(s.values()[k]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
