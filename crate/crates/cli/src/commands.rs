//! Subcommand implementations. Each returns `Ok(true)` when every check
//! passed, `Ok(false)` when a check failed and `Err` when execution failed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use ocl_core::compat::{check_compatibility, construct_v0, Verdict};
use ocl_core::convergence::{
    cauchy_check, rate_fit, run_sweep, write_summary_csv, CauchyReport, SweepRecord,
};
use ocl_core::solver::{
    contraction_horizon, estimate_contraction, run, solve_homogeneous_with, standard_seeds,
    uniform_times, PICARD_RADIUS,
};
use ocl_core::{fmt_f64, Field, Obstacle, SolverConfig};

use crate::checks::{compute_checks, RunChecks};
use crate::config::{parse_config, Resolved};
use crate::manifest::{
    hash_file, GridRecord, PicardRecord, RunManifest, StatsRecord, SweepRecordSummary,
};
use crate::persist::{read_snapshots, read_trajectory, write_diagnostics, write_snapshots};

pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUBSOLUTION_FILE: &str = "subsolution.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPAT_FILE: &str = "compat.csv";
pub const PICARD_FILE: &str = "picard.csv";

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    /// Omit the wall-clock and reject settings that would record one.
    pub seedless: bool,
}

fn load(config: &Path, opts: Options) -> Result<Resolved> {
    let r = parse_config(config)?;
    if opts.seedless && r.config.output.wall_clock == Some(true) {
        bail!("--seedless rejects the nondeterministic setting output.wall_clock = true");
    }
    Ok(r)
}

fn wall_clock(r: &Resolved, opts: Options) -> Option<u64> {
    if r.config.output.wall_clock.unwrap_or(!opts.seedless) {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    } else {
        None
    }
}

fn manifest(command: &str, r: &Resolved, opts: Options) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock: wall_clock(r, opts),
        config: r.config.clone(),
        grid: Some(GridRecord {
            x_min: r.grid.x_min(),
            x_max: r.grid.x_max(),
            n_cells: r.grid.n_cells(),
        }),
        stats: None,
        checks: None,
        compat: None,
        picard: Vec::new(),
        sweep: None,
        files: Vec::new(),
    }
}

fn finish(mut m: RunManifest, out: &Path, files: &[String]) -> Result<()> {
    m.files = files
        .iter()
        .map(|f| hash_file(out, f))
        .collect::<Result<_>>()?;
    m.write(out)
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

/// The unconstrained run from `min(u0, gamma)` used by the comparison check.
fn subsolution(r: &Resolved, u0: &Field) -> Result<ocl_core::Trajectory> {
    let lb = r.problem.obstacle.lower_bound();
    let gamma = r.config.compat.gamma.unwrap_or(0.5 * lb);
    let v0 = construct_v0(u0, lb, gamma)?;
    Ok(solve_homogeneous_with(
        &r.solver,
        &v0,
        &r.problem.flux,
        &r.output_times,
    )?)
}

fn checks_from_disk(r: &Resolved, dir: &Path) -> Result<RunChecks> {
    let traj = read_trajectory(
        &dir.join(SNAPSHOTS_FILE),
        &dir.join(DIAGNOSTICS_FILE),
        &r.grid,
    )?;
    let sub = read_snapshots(&dir.join(SUBSOLUTION_FILE), &r.grid)?;
    let u0 = r.problem.initial_field(&r.grid)?;
    compute_checks(r, &traj, &sub, &u0)
}

fn print_checks(c: &RunChecks) {
    for line in c.lines() {
        println!("{line}");
    }
}

pub fn cmd_run(config: &Path, out: &Path, opts: Options) -> Result<bool> {
    let r = load(config, opts)?;
    create_dir(out)?;
    let u0 = r.problem.initial_field(&r.grid)?;
    let theta = &r.problem.obstacle;
    let traj = run(&r.solver, &u0, theta, &r.problem.flux, &r.output_times)?;
    let sub = subsolution(&r, &u0)?;
    write_snapshots(&out.join(SNAPSHOTS_FILE), &traj, theta)?;
    write_diagnostics(&out.join(DIAGNOSTICS_FILE), &traj)?;
    write_snapshots(&out.join(SUBSOLUTION_FILE), &sub, theta)?;

    // Checks read the files back, exactly as `verify` will.
    let checks = checks_from_disk(&r, out)?;
    print_checks(&checks);
    let pass = checks.pass;
    let mut m = manifest("run", &r, opts);
    m.stats = Some(StatsRecord::from(traj.stats));
    m.checks = Some(checks);
    let files = [SNAPSHOTS_FILE, DIAGNOSTICS_FILE, SUBSOLUTION_FILE].map(String::from);
    finish(m, out, &files)?;
    Ok(pass)
}

/// Re-runs the checks of a `run` directory from its files. Refuses to run
/// when any listed file changed; fails when the results differ from the
/// recorded ones.
pub fn cmd_verify(dir: &Path) -> Result<bool> {
    let m = RunManifest::read(dir)?;
    if m.command != "run" {
        bail!(
            "verify needs a `run` directory, this one was produced by `{}`",
            m.command
        );
    }
    m.check_files(dir)?;
    let r = m.config.resolve()?;
    if let Some(g) = m.grid {
        if (g.x_min, g.x_max, g.n_cells) != (r.grid.x_min(), r.grid.x_max(), r.grid.n_cells()) {
            bail!("recorded grid does not match the resolved config");
        }
    }
    let checks = checks_from_disk(&r, dir)?;
    print_checks(&checks);
    let recorded = m.checks.as_ref().map(toml::to_string).transpose()?;
    if recorded.as_deref() != Some(toml::to_string(&checks)?.as_str()) {
        println!("recomputed checks differ from the manifest");
        return Ok(false);
    }
    Ok(checks.pass)
}

/// Successive gaps within each grid of the ladder; the first point of each
/// grid has no predecessor.
fn per_grid_cauchy(records: &[SweepRecord]) -> CauchyReport {
    let mut gaps = Vec::new();
    let mut warnings = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.dx == records[start].dx)
                .count();
        let rep = cauchy_check(&records[start..end]);
        if start > 0 {
            gaps.push(None);
        }
        gaps.extend(rep.gaps);
        warnings.extend(
            rep.warnings
                .into_iter()
                .map(|w| format!("dx {}: {w}", records[start].dx)),
        );
        start = end;
    }
    CauchyReport { gaps, warnings }
}

pub fn cmd_sweep(config: &Path, out: &Path, opts: Options) -> Result<bool> {
    let r = load(config, opts)?;
    let Some(cfg) = &r.sweep else {
        bail!("the config has no [sweep] section");
    };
    create_dir(out)?;
    let records = run_sweep(cfg)?;
    let cauchy = per_grid_cauchy(&records);

    let mut files = vec![SUMMARY_FILE.to_string()];
    let mut w = BufWriter::new(File::create(out.join(SUMMARY_FILE))?);
    write_summary_csv(&records, &cauchy, &mut w)?;
    w.flush()?;
    create_dir(&out.join("final"))?;
    let mut failed = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let label = format!(
            "n={} eps={} dx={}",
            fmt_f64(rec.n),
            fmt_f64(rec.eps),
            fmt_f64(rec.dx)
        );
        match &rec.outcome {
            Ok(s) => {
                let rel = format!("final/point_{i:03}.csv");
                let mut w = BufWriter::new(File::create(out.join(&rel))?);
                s.final_field().write_csv(&mut w)?;
                w.flush()?;
                files.push(rel);
                println!(
                    "{label}: max_phi {:e} alpha_hat {:e} mass_dev {:e}",
                    s.max_phi, s.alpha_hat, s.mass_dev
                );
            }
            Err(e) => {
                println!("{label}: FAILED {e}");
                failed.push(format!("{label}: {e}"));
            }
        }
    }

    let finest = cfg.dx_ladder.last().copied();
    let (ns, phis): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|rec| Some(rec.dx) == finest)
        .filter_map(|rec| rec.summary().map(|s| (rec.n, s.max_phi)))
        .unzip();
    let phi_rate = rate_fit(&ns, &phis).ok();
    if let Some(rate) = phi_rate {
        println!("empirical max_phi rate {rate:.3}");
    }
    for warning in &cauchy.warnings {
        println!("warning: {warning}");
    }
    let mass_tol = r.config.verify.mass_tol;
    let pass = failed.is_empty()
        && records
            .iter()
            .filter_map(SweepRecord::summary)
            .all(|s| s.mass_dev <= mass_tol);

    let mut m = manifest("sweep", &r, opts);
    m.grid = None;
    m.sweep = Some(SweepRecordSummary {
        points: records.len(),
        failed,
        phi_rate,
        cauchy_warnings: cauchy.warnings,
    });
    finish(m, out, &files)?;
    Ok(pass)
}

pub fn cmd_compat(config: &Path, out: &Path, opts: Options) -> Result<bool> {
    let r = load(config, opts)?;
    create_dir(out)?;
    let u0 = r.problem.initial_field(&r.grid)?;
    let rep = check_compatibility(
        &u0,
        &r.problem.obstacle,
        &r.problem.flux,
        r.solver.t_end,
        &r.config.compat,
    )?;
    let mut w = BufWriter::new(File::create(out.join(COMPAT_FILE))?);
    writeln!(w, "t,support_integral")?;
    for (t, s) in rep.support_integral.iter() {
        writeln!(w, "{},{}", fmt_f64(t), fmt_f64(s))?;
    }
    w.flush()?;
    println!("verdict {}", rep.verdict);
    println!("beta_hat {:e}", rep.beta_hat);
    println!("time_of_minimum {:e}", rep.time_of_minimum);
    let pass = rep.verdict == Verdict::Compatible;
    let mut m = manifest("compat", &r, opts);
    m.compat = Some(rep);
    finish(m, out, &[COMPAT_FILE.to_string()])?;
    Ok(pass)
}

pub fn cmd_picard(config: &Path, out: &Path, opts: Options) -> Result<bool> {
    let r = load(config, opts)?;
    create_dir(out)?;
    let u0 = r.problem.initial_field(&r.grid)?;
    let pc = &r.config.picard;
    let mut records = Vec::new();
    for &n in &pc.n {
        let t0 = contraction_horizon(n, PICARD_RADIUS, 0.5)?;
        let times = uniform_times(t0, pc.output_count);
        let seeds = standard_seeds(&u0, &r.problem.obstacle, n, &times)?;
        let cfg = SolverConfig { n, ..r.solver };
        let rep = estimate_contraction(
            &cfg,
            &r.problem.flux,
            &r.problem.obstacle,
            &u0,
            (&seeds.0, &seeds.1),
            pc.iterations,
        )?;
        println!("n {n} t0 {:e} k_hat {:e}", rep.t0, rep.k_hat);
        records.push(PicardRecord {
            n,
            t0: rep.t0,
            k_hat: rep.k_hat,
            contracting: rep.contracting(),
            geometric: rep.geometric(),
            iterate_distances: rep.iterate_distances,
        });
    }
    let mut w = BufWriter::new(File::create(out.join(PICARD_FILE))?);
    writeln!(w, "n,t0,k_hat,iteration,distance")?;
    for rec in &records {
        for (k, d) in rec.iterate_distances.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(rec.n),
                fmt_f64(rec.t0),
                fmt_f64(rec.k_hat),
                k + 1,
                fmt_f64(*d)
            )?;
        }
    }
    w.flush()?;
    let pass = records.iter().all(|p| p.contracting && p.geometric);
    let mut m = manifest("picard", &r, opts);
    m.picard = records;
    finish(m, out, &[PICARD_FILE.to_string()])?;
    Ok(pass)
}
