use serde::{Deserialize, Serialize};

use crate::error::{validation, OclError, Result};

/// Closed-form flux families. All satisfy `f(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxKind {
    /// `f(u) = a u`
    Linear { a: f64 },
    /// `f(u) = u^2 / 2`
    Burgers,
    /// `f(u) = c u^3`
    Cubic { c: f64 },
}

/// A flux together with its declared working range `[0, L]`.
///
/// Outside the range the flux is continued linearly with the boundary slope,
/// so `|f'| <= M` holds on all of the real line and evaluations there are
/// flagged as clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSpec {
    kind: FluxKind,
    hi: f64,
    m: f64,
    m_prime: f64,
}

/// Result of a range-checked flux evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub clamped: bool,
}

impl FluxSpec {
    pub fn new(kind: FluxKind, declared_range: f64) -> Result<Self> {
        if !(declared_range.is_finite() && declared_range > 0.0) {
            return Err(validation(
                "declared range L > 0",
                format!("got L = {declared_range}"),
            ));
        }
        match kind {
            FluxKind::Linear { a } if !a.is_finite() => {
                return Err(validation("finite flux parameter", format!("a = {a}")))
            }
            FluxKind::Cubic { c } if !c.is_finite() => {
                return Err(validation("finite flux parameter", format!("c = {c}")))
            }
            _ => {}
        }
        let (m, m_prime) = lipschitz_on(kind, 0.0, declared_range);
        let spec = Self {
            kind,
            hi: declared_range,
            m,
            m_prime,
        };
        debug_assert_eq!(spec.f(0.0), 0.0);
        Ok(spec)
    }

    pub fn burgers(declared_range: f64) -> Result<Self> {
        Self::new(FluxKind::Burgers, declared_range)
    }

    pub fn linear(a: f64, declared_range: f64) -> Result<Self> {
        Self::new(FluxKind::Linear { a }, declared_range)
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn declared_range(&self) -> (f64, f64) {
        (0.0, self.hi)
    }

    /// `(M, M')` over the declared range.
    pub fn bounds(&self) -> (f64, f64) {
        (self.m, self.m_prime)
    }

    #[inline]
    fn clamp(&self, u: f64) -> f64 {
        u.clamp(0.0, self.hi)
    }

    #[inline]
    fn f_exact(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Linear { a } => a * u,
            FluxKind::Burgers => 0.5 * u * u,
            FluxKind::Cubic { c } => c * u * u * u,
        }
    }

    #[inline]
    fn fp_exact(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Linear { a } => a,
            FluxKind::Burgers => u,
            FluxKind::Cubic { c } => 3.0 * c * u * u,
        }
    }

    #[inline]
    fn fpp_exact(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Linear { .. } => 0.0,
            FluxKind::Burgers => 1.0,
            FluxKind::Cubic { c } => 6.0 * c * u,
        }
    }

    /// `f(u)`, continued linearly outside the declared range.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        let uc = self.clamp(u);
        if uc == u {
            self.f_exact(u)
        } else {
            self.f_exact(uc) + self.fp_exact(uc) * (u - uc)
        }
    }

    #[inline]
    pub fn f_prime(&self, u: f64) -> f64 {
        self.fp_exact(self.clamp(u))
    }

    #[inline]
    pub fn f_second(&self, u: f64) -> f64 {
        let uc = self.clamp(u);
        if uc == u {
            self.fpp_exact(u)
        } else {
            0.0
        }
    }

    fn checked(&self, u: f64, eval: impl Fn(f64) -> f64) -> Result<Evaluated> {
        if !u.is_finite() {
            return Err(OclError::InvalidArgument(format!(
                "flux evaluated at non-finite u = {u}"
            )));
        }
        Ok(Evaluated {
            value: eval(u),
            clamped: self.clamp(u) != u,
        })
    }

    pub fn eval_flux(&self, u: f64) -> Result<Evaluated> {
        self.checked(u, |v| self.f(v))
    }

    pub fn eval_flux_prime(&self, u: f64) -> Result<Evaluated> {
        self.checked(u, |v| self.f_prime(v))
    }

    pub fn eval_flux_second(&self, u: f64) -> Result<Evaluated> {
        self.checked(u, |v| self.f_second(v))
    }

    /// `sup |f'|` over `[lo, hi]` for the continued flux.
    #[inline]
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (self.clamp(lo), self.clamp(hi));
        match self.kind {
            FluxKind::Linear { a } => a.abs(),
            FluxKind::Burgers => lo.abs().max(hi.abs()),
            FluxKind::Cubic { c } => 3.0 * c.abs() * (lo * lo).max(hi * hi),
        }
    }

    /// `(sup |f'|, sup |f''|)` over `[lo, hi]`, computed analytically.
    pub fn lipschitz_bounds(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(OclError::InvalidArgument(format!(
                "empty or non-finite range [{lo}, {hi}]"
            )));
        }
        Ok(lipschitz_on(self.kind, lo, hi))
    }
}

fn lipschitz_on(kind: FluxKind, lo: f64, hi: f64) -> (f64, f64) {
    let amax = lo.abs().max(hi.abs());
    match kind {
        FluxKind::Linear { a } => (a.abs(), 0.0),
        FluxKind::Burgers => (amax, 1.0),
        FluxKind::Cubic { c } => (3.0 * c.abs() * amax * amax, 6.0 * c.abs() * amax),
    }
}
