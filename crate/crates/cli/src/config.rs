//! TOML configuration: parsing, defaults and validation.
//!
//! Every section has defaults, so a file naming only the flux, obstacle and
//! datum is complete. [`Config::resolve`] fills every derived default into
//! the returned copy of the config, which is what gets echoed into the run
//! manifest; resolving that copy again is the identity.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ocl_core::compat::CompatConfig;
use ocl_core::convergence::{coupled_ladder, SweepConfig};
use ocl_core::model::padded_domain;
use ocl_core::solver::{uniform_times, Splitting};
use ocl_core::verify::{EntropyTestConfig, TestBump};
use ocl_core::{
    FluxKind, FluxSpec, Grid1D, InitialData, Obstacle, ObstacleSpec, ProblemSpec, SolverConfig,
};
use serde::{Deserialize, Serialize};

/// Name of the built-in entropy test family. Bumping it invalidates stored
/// entropy results.
pub const ENTROPY_FAMILY: &str = "standard-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub entropy: EntropySection,
    #[serde(default)]
    pub compat: CompatConfig,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub flux: FluxKind,
    /// Upper end of the state range `[0, L]` the flux is declared on.
    #[serde(default = "default_flux_range")]
    pub flux_range: f64,
    pub obstacle: ObstacleSpec,
    pub datum: InitialData,
}

fn default_flux_range() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Both ends default to the datum support padded by the distance mass
    /// can travel by `t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default = "default_dx")]
    pub dx: f64,
}

fn default_dx() -> f64 {
    1.0 / 200.0
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min: None,
            x_max: None,
            dx: default_dx(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_n")]
    pub n: f64,
    /// Defaults to `coupling / n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default)]
    pub splitting: Splitting,
    #[serde(default = "default_reaction_cap")]
    pub reaction_dt_cap: f64,
    #[serde(default = "default_leak_tol")]
    pub boundary_leak_tol: f64,
}

fn default_n() -> f64 {
    100.0
}
fn one() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.45
}
fn default_reaction_cap() -> f64 {
    0.5
}
fn default_leak_tol() -> f64 {
    1e-10
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            n: default_n(),
            eps: None,
            coupling: one(),
            cfl: default_cfl(),
            t_end: one(),
            splitting: Splitting::default(),
            reaction_dt_cap: default_reaction_cap(),
            boundary_leak_tol: default_leak_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Snapshots at `count` equally spaced times in `[0, t_end]`.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Record the wall-clock in the manifest. Unset means "yes unless
    /// running seedless"; `true` is rejected under `--seedless`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<bool>,
}

fn default_count() -> usize {
    101
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            count: default_count(),
            wall_clock: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n: Vec<f64>,
    /// `eps = coupling / n`; defaults to the solver coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// Coarse to fine; defaults to the grid spacing alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_iterations: Option<usize>,
    /// Evaluate the entropy family at every point.
    #[serde(default)]
    pub entropy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_family")]
    pub family: String,
    /// Spatial window the bump centers spread over; defaults to the middle
    /// 80% of the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_entropy_tol")]
    pub tolerance: f64,
    /// Replace the built-in family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_functions: Option<Vec<TestBump>>,
}

fn yes() -> bool {
    true
}
fn default_family() -> String {
    ENTROPY_FAMILY.to_string()
}
fn default_entropy_tol() -> f64 {
    1e-2
}

impl Default for EntropySection {
    fn default() -> Self {
        Self {
            enabled: true,
            family: default_family(),
            window: None,
            tolerance: default_entropy_tol(),
            k_samples: None,
            test_functions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(default = "default_picard_n")]
    pub n: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Snapshots over `[0, T0]`.
    #[serde(default = "default_picard_count")]
    pub output_count: usize,
}

fn default_picard_n() -> Vec<f64> {
    vec![1.0]
}
fn default_iterations() -> usize {
    4
}
fn default_picard_count() -> usize {
    21
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            n: default_picard_n(),
            iterations: default_iterations(),
            output_count: default_picard_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Contact tolerance of the multiplier reconstruction is `tau_factor / n`.
    #[serde(default = "default_tau_factor")]
    pub tau_factor: f64,
    /// Allowed `max_t |int u - 1|`.
    #[serde(default = "default_mass_tol")]
    pub mass_tol: f64,
    /// Relative slack of the sup-norm bound.
    #[serde(default = "default_linf_tol")]
    pub linf_tol: f64,
    /// Time samples for the obstacle regularity constant.
    #[serde(default = "default_c_theta_times")]
    pub c_theta_times: usize,
    /// Denominator floor of the multiplier gap; default 5% of `max lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_floor: Option<f64>,
}

fn default_tau_factor() -> f64 {
    10.0
}
fn default_mass_tol() -> f64 {
    5e-3
}
fn default_linf_tol() -> f64 {
    1e-9
}
fn default_c_theta_times() -> usize {
    100
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            tau_factor: default_tau_factor(),
            mass_tol: default_mass_tol(),
            linf_tol: default_linf_tol(),
            c_theta_times: default_c_theta_times(),
            gap_floor: None,
        }
    }
}

/// Everything a subcommand needs, built from a [`Config`].
#[derive(Debug, Clone)]
pub struct Resolved {
    /// The input with every derived default written in.
    pub config: Config,
    pub problem: ProblemSpec,
    pub grid: Grid1D,
    pub solver: SolverConfig,
    pub output_times: Vec<f64>,
    pub entropy: Option<EntropyTestConfig>,
    pub sweep: Option<SweepConfig>,
}

/// Reads and resolves a config file.
pub fn parse_config(path: &Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("in config {}", path.display()))
}

/// Parses TOML text. Unknown keys and type errors name the offending key path.
pub fn parse_config_str(text: &str) -> Result<Resolved> {
    Config::from_toml(text)?.resolve()
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("at key `{path}`: {}", e.into_inner().message())
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Validates every section and fills the derived defaults.
    pub fn resolve(&self) -> Result<Resolved> {
        let mut config = self.clone();
        let p = &config.problem;
        let flux = FluxSpec::new(p.flux, p.flux_range)?;
        let problem = ProblemSpec::new(flux, p.obstacle.clone(), p.datum.clone())?;

        let s = &mut config.solver;
        if !(s.coupling > 0.0 && s.coupling.is_finite()) {
            bail!(
                "validation failed (coupling > 0): coupling = {}",
                s.coupling
            );
        }
        if !(s.n > 0.0) {
            bail!("validation failed (n > 0): n = {}", s.n);
        }
        let eps = *s.eps.get_or_insert(s.coupling / s.n);
        let solver = SolverConfig {
            n: s.n,
            eps,
            cfl: s.cfl,
            t_end: s.t_end,
            splitting: s.splitting,
            reaction_dt_cap: s.reaction_dt_cap,
            boundary_leak_tol: s.boundary_leak_tol,
        };
        solver.validate()?;

        let g = &mut config.grid;
        if !(g.dx > 0.0 && g.dx.is_finite()) {
            bail!("validation failed (dx > 0): dx = {}", g.dx);
        }
        if g.x_min.is_none() || g.x_max.is_none() {
            let (lo, hi) = problem.flux.declared_range();
            let m = problem.flux.max_speed(lo.max(0.0), hi);
            let (a, b) = padded_domain(problem.datum.support(), m, solver.t_end, eps);
            g.x_min.get_or_insert(a);
            g.x_max.get_or_insert(b);
        }
        let (x_min, x_max) = (g.x_min.unwrap_or_default(), g.x_max.unwrap_or_default());
        let grid = Grid1D::with_spacing(x_min, x_max, g.dx)?;
        problem.obstacle.validate_on(&grid, solver.t_end)?;

        if config.output.count < 2 {
            bail!(
                "validation failed (output count >= 2): count = {}",
                config.output.count
            );
        }
        let output_times = uniform_times(solver.t_end, config.output.count);

        let e = &mut config.entropy;
        if e.family != ENTROPY_FAMILY {
            bail!(
                "validation failed (entropy family is {ENTROPY_FAMILY}): got `{}`",
                e.family
            );
        }
        let window = *e.window.get_or_insert_with(|| {
            let w = x_max - x_min;
            [x_min + 0.1 * w, x_max - 0.1 * w]
        });
        if !(window[0] < window[1] && window[0] >= x_min && window[1] <= x_max) {
            bail!(
                "validation failed (entropy window inside the domain): {window:?} vs [{x_min}, {x_max}]"
            );
        }
        let mut family = EntropyTestConfig::standard(solver.t_end, (window[0], window[1]));
        family.tolerance = e.tolerance;
        if let Some(k) = &e.k_samples {
            family.k_samples = k.clone();
        }
        if let Some(b) = &e.test_functions {
            family.test_functions = b.clone();
        }
        family.validate()?;
        let entropy = e.enabled.then_some(family.clone());

        let c = &config.compat;
        if let Some(gamma) = c.gamma {
            let lb = problem.obstacle.lower_bound();
            if !(gamma > 0.0 && gamma < lb) {
                bail!("validation failed (0 < gamma < theta_lower): gamma = {gamma}, theta_lower = {lb}");
            }
        }
        if !(c.margin >= 0.0) || c.output_count < 2 {
            bail!("validation failed (compat margin >= 0, output_count >= 2)");
        }

        let pc = &config.picard;
        if pc.n.is_empty() || pc.n.iter().any(|n| !(*n > 0.0)) {
            bail!("validation failed (picard n > 0): {:?}", pc.n);
        }
        if pc.iterations == 0 || pc.output_count < 2 {
            bail!("validation failed (picard iterations >= 1, output_count >= 2)");
        }

        let v = &config.verify;
        if !(v.tau_factor > 0.0 && v.mass_tol >= 0.0 && v.linf_tol >= 0.0) || v.c_theta_times == 0 {
            bail!("validation failed (tau_factor > 0, tolerances >= 0, c_theta_times >= 1)");
        }

        let sweep = match &mut config.sweep {
            Some(sw) => {
                let coupling = *sw.coupling.get_or_insert(config.solver.coupling);
                let dx_ladder = sw.dx.get_or_insert_with(|| vec![grid.dx()]).clone();
                let cfg = SweepConfig {
                    problem: problem.clone(),
                    domain: (x_min, x_max),
                    points: coupled_ladder(&sw.n, coupling),
                    dx_ladder,
                    solver,
                    output_times: output_times.clone(),
                    entropy: sw.entropy.then_some(family),
                    picard_iterations: sw.picard_iterations,
                };
                cfg.validate()?;
                Some(cfg)
            }
            None => None,
        };

        Ok(Resolved {
            config,
            problem,
            grid,
            solver,
            output_times,
            entropy,
            sweep,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
flux = { kind = "burgers" }
obstacle = { kind = "constant", value = 2.0 }
datum = { kind = "box", a = 0.0, b = 1.0 }
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let r = parse_config_str(MINIMAL).unwrap();
        assert_eq!(r.solver.n, 100.0);
        assert_eq!(r.solver.eps, 0.01);
        assert!((r.grid.dx() - 1.0 / 200.0).abs() < 1e-12);
        assert_eq!(r.solver.cfl, 0.45);
        assert_eq!(r.output_times.len(), 101);
        assert!(r.grid.x_min() < 0.0 && r.grid.x_max() > 1.0);
        assert_eq!(r.entropy.as_ref().unwrap().test_functions.len(), 30);
        assert!(r.sweep.is_none());
        assert_eq!(r.config.solver.eps, Some(0.01));
    }

    #[test]
    fn resolved_config_round_trips() {
        let r = parse_config_str(MINIMAL).unwrap();
        let text = r.config.to_toml().unwrap();
        let again = parse_config_str(&text).unwrap();
        assert_eq!(again.config, r.config);
        assert_eq!(again.grid, r.grid);
    }

    #[test]
    fn zero_obstacle_names_the_invariant() {
        let text = MINIMAL.replace("value = 2.0", "value = 0.0");
        let err = format!("{:#}", parse_config_str(&text).unwrap_err());
        assert!(err.contains("theta >= theta_lower > 0"), "{err}");
    }

    #[test]
    fn cfl_out_of_range_is_rejected() {
        let text = format!("{MINIMAL}\n[solver]\ncfl = 1.5\n");
        let err = format!("{:#}", parse_config_str(&text).unwrap_err());
        assert!(err.contains("cfl"), "{err}");
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = format!("{MINIMAL}\n[solver]\ncfll = 0.5\n");
        let err = format!("{:#}", parse_config_str(&text).unwrap_err());
        assert!(err.contains("solver") && err.contains("cfll"), "{err}");
        let text = MINIMAL.replace("a = 0.0", "a = 0.0, c = 1.0");
        let err = format!("{:#}", parse_config_str(&text).unwrap_err());
        assert!(err.contains("problem.datum"), "{err}");
    }

    #[test]
    fn sweep_section_builds_a_ladder() {
        let text = format!("{MINIMAL}\n[sweep]\nn = [10, 40]\ndx = [0.02, 0.01]\n");
        let r = parse_config_str(&text).unwrap();
        let sw = r.sweep.unwrap();
        assert_eq!(sw.points.len(), 2);
        assert_eq!(sw.points[1].eps, 1.0 / 40.0);
        assert_eq!(sw.keys().len(), 4);
        let bad = format!("{MINIMAL}\n[sweep]\nn = [40, 10]\n");
        assert!(parse_config_str(&bad).is_err());
    }

    #[test]
    fn unknown_entropy_family_is_rejected() {
        let text = format!("{MINIMAL}\n[entropy]\nfamily = \"other\"\n");
        assert!(parse_config_str(&text).is_err());
    }
}
