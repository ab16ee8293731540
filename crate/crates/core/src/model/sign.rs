use crate::error::{OclError, Result};

/// Lipschitz regularizations of `sgn` and `(.)^+` with width `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedSign {
    delta: f64,
}

impl RegularizedSign {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(OclError::InvalidArgument(format!(
                "regularization width must be positive, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Linear on `[-delta, delta]`, `+-1` outside.
    #[inline]
    pub fn sgn(&self, u: f64) -> f64 {
        (u / self.delta).clamp(-1.0, 1.0)
    }

    /// `int_0^u sgn_delta(v)^+ dv`.
    #[inline]
    pub fn i_delta(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u <= self.delta {
            u * u / (2.0 * self.delta)
        } else {
            u - 0.5 * self.delta
        }
    }

    /// `u * sgn_delta(u)^+`.
    #[inline]
    pub fn pos(&self, u: f64) -> f64 {
        u * self.sgn(u).max(0.0)
    }
}
