use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    #[default]
    Lie,
    Strang,
}

/// Parameters of one penalized viscous run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Penalization strength.
    pub n: f64,
    /// Viscosity.
    pub eps: f64,
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub splitting: Splitting,
    /// Upper bound on `dt * lambda_last`.
    #[serde(default = "default_reaction_cap")]
    pub reaction_dt_cap: f64,
    /// Cumulative mass allowed to leave through the truncated boundary.
    #[serde(default = "default_leak_tol")]
    pub boundary_leak_tol: f64,
}

fn default_reaction_cap() -> f64 {
    0.5
}

fn default_leak_tol() -> f64 {
    1e-10
}

impl SolverConfig {
    pub fn new(n: f64, eps: f64, cfl: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            n,
            eps,
            cfl,
            t_end,
            splitting: Splitting::Lie,
            reaction_dt_cap: default_reaction_cap(),
            boundary_leak_tol: default_leak_tol(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = splitting;
        self
    }

    pub fn with_leak_tol(mut self, tol: f64) -> Self {
        self.boundary_leak_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(validation("n > 0", format!("n = {}", self.n)));
        }
        self.validate_common()
    }

    /// Same checks with `n = 0` admitted, for the unpenalized problem.
    pub(crate) fn validate_common(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(validation("eps >= 0", format!("eps = {}", self.eps)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(validation("0 < cfl <= 1", format!("cfl = {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(validation("T > 0", format!("T = {}", self.t_end)));
        }
        if !(self.reaction_dt_cap > 0.0 && self.reaction_dt_cap < 1.0) {
            return Err(validation(
                "0 < reaction_dt_cap < 1",
                format!("reaction_dt_cap = {}", self.reaction_dt_cap),
            ));
        }
        if !(self.boundary_leak_tol >= 0.0) {
            return Err(validation(
                "boundary_leak_tol >= 0",
                format!("boundary_leak_tol = {}", self.boundary_leak_tol),
            ));
        }
        Ok(())
    }
}
