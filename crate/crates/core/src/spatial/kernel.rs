use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `C · 1{‖x−y‖ ≤ R̄}`.
    Indicator,
    /// `C · (1 − ‖x−y‖/R̄)_+`.
    Tent,
}

/// Symmetric, bounded, compactly supported contact kernel.
///
/// Bounds: `K ≤ amplitude`, `K ≥ floor` within `lower_radius`, `K = 0`
/// beyond `support`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub amplitude: f64,
    pub support: f64,
    pub lower_radius: f64,
    pub floor: f64,
}

impl KernelSpec {
    /// Builds a kernel whose floor is the largest admissible one on
    /// `‖x−y‖ ≤ lower_radius`.
    pub fn new(
        family: KernelFamily,
        amplitude: f64,
        support: f64,
        lower_radius: f64,
    ) -> Result<Self> {
        if !(amplitude > 0.0) || !(support > 0.0) || !(lower_radius > 0.0) {
            return Err(Error::Config(
                "kernel amplitude, support and lower radius must be positive".into(),
            ));
        }
        if lower_radius > support {
            return Err(Error::Config(format!(
                "kernel lower-bound radius {lower_radius} exceeds support {support}"
            )));
        }
        let floor = match family {
            KernelFamily::Indicator => amplitude,
            KernelFamily::Tent => amplitude * (1.0 - lower_radius / support),
        };
        if !(floor > 0.0) {
            return Err(Error::Config(
                "tent kernel needs lower radius strictly below the support".into(),
            ));
        }
        Ok(Self {
            family,
            amplitude,
            support,
            lower_radius,
            floor,
        })
    }

    /// Replaces the floor by a smaller user-supplied one.
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) || floor > self.floor {
            return Err(Error::Config(format!(
                "kernel floor {floor} must lie in (0, {}]",
                self.floor
            )));
        }
        self.floor = floor;
        Ok(self)
    }

    /// Kernel as a function of the distance.
    #[inline]
    pub fn profile(&self, rho: f64) -> f64 {
        if rho > self.support {
            return 0.0;
        }
        match self.family {
            KernelFamily::Indicator => self.amplitude,
            KernelFamily::Tent => self.amplitude * (1.0 - rho / self.support),
        }
    }

    /// Same as [`profile`](Self::profile) with the squared distance.
    #[inline]
    pub fn profile_sq(&self, rho2: f64) -> f64 {
        if rho2 > self.support * self.support {
            return 0.0;
        }
        match self.family {
            KernelFamily::Indicator => self.amplitude,
            KernelFamily::Tent => self.amplitude * (1.0 - rho2.sqrt() / self.support),
        }
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.profile_sq(super::dist2(x, y))
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }
}
