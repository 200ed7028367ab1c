use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{norm, DomainSpec, Shape};
use crate::error::{Error, Result};

/// Per-compartment position law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DensityFamily {
    /// Density proportional to `exp(−rate·‖x‖^δ)` on D.
    ExpPower { rate: f64 },
    /// Uniform on `[−L, L]^d ∩ D`. Violates the exponential envelope.
    UniformBox { half_width: f64 },
}

/// Exponential-power bounds `c0·e^{−a‖x‖^δ} ≤ μ̄(x) ≤ c1·e^{−a‖x‖^δ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub rate: f64,
    pub exponent: f64,
    pub c0: f64,
    pub c1: f64,
}

impl Envelope {
    pub fn profile(&self, x: &[f64]) -> f64 {
        (-self.rate * norm(x).powf(self.exponent)).exp()
    }
}

/// Limiting population density μ̄ and its compartment decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDensity {
    pub dim: usize,
    pub shape: Shape,
    /// Common exponent δ of the exponential-power families.
    pub exponent: f64,
    /// `(S̄(0), Ī(0), R̄(0))`.
    pub fractions: [f64; 3],
    pub families: [DensityFamily; 3],
    norms: [f64; 3],
    envelope: Option<Envelope>,
}

fn sphere_area(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0)
}

impl BaselineDensity {
    pub fn new(
        domain: &DomainSpec,
        exponent: f64,
        fractions: [f64; 3],
        families: [DensityFamily; 3],
    ) -> Result<Self> {
        if fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::Config("compartment fractions must be non-negative".into()));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "compartment fractions must sum to 1 (got {total})"
            )));
        }
        if !(exponent > 0.0) {
            return Err(Error::Config("envelope exponent delta must be positive".into()));
        }
        let d = domain.dim as f64;
        let half = match domain.shape {
            Shape::FullSpace => 1.0,
            Shape::HalfSpace => 0.5,
        };
        let mut norms = [0.0; 3];
        for (k, fam) in families.iter().enumerate() {
            norms[k] = match *fam {
                DensityFamily::ExpPower { rate } => {
                    if !(rate > 0.0) {
                        return Err(Error::Config("envelope rate a must be positive".into()));
                    }
                    half * sphere_area(domain.dim) * gamma(d / exponent)
                        / (exponent * rate.powf(d / exponent))
                }
                DensityFamily::UniformBox { half_width } => {
                    if !(half_width > 0.0) {
                        return Err(Error::Config("uniform box half-width must be positive".into()));
                    }
                    half * (2.0 * half_width).powi(domain.dim as i32)
                }
            };
        }
        let envelope = Self::derive_envelope(exponent, &fractions, &families, &norms);
        Ok(Self {
            dim: domain.dim,
            shape: domain.shape,
            exponent,
            fractions,
            families,
            norms,
            envelope,
        })
    }

    fn derive_envelope(
        exponent: f64,
        fractions: &[f64; 3],
        families: &[DensityFamily; 3],
        norms: &[f64; 3],
    ) -> Option<Envelope> {
        let mut rates = Vec::new();
        for k in 0..3 {
            if fractions[k] == 0.0 {
                continue;
            }
            match families[k] {
                DensityFamily::ExpPower { rate } => rates.push((k, rate)),
                DensityFamily::UniformBox { .. } => return None,
            }
        }
        let a = rates.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let c0 = rates
            .iter()
            .filter(|r| r.1 == a)
            .map(|&(k, _)| fractions[k] / norms[k])
            .sum();
        let c1 = rates.iter().map(|&(k, _)| fractions[k] / norms[k]).sum();
        Some(Envelope {
            rate: a,
            exponent,
            c0,
            c1,
        })
    }

    /// `None` when a compartment with positive mass uses the uniform surrogate.
    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        match self.shape {
            Shape::FullSpace => true,
            Shape::HalfSpace => x[0] >= 0.0,
        }
    }

    /// Probability density π_k at `x` (k = 0, 1, 2 for S, I, R).
    pub fn compartment_pdf(&self, k: usize, x: &[f64]) -> f64 {
        if !self.in_domain(x) {
            return 0.0;
        }
        match self.families[k] {
            DensityFamily::ExpPower { rate } => {
                (-rate * norm(x).powf(self.exponent)).exp() / self.norms[k]
            }
            DensityFamily::UniformBox { half_width } => {
                if x.iter().all(|c| c.abs() <= half_width) {
                    1.0 / self.norms[k]
                } else {
                    0.0
                }
            }
        }
    }

    /// Total density μ̄(x).
    pub fn mu(&self, x: &[f64]) -> f64 {
        (0..3)
            .filter(|&k| self.fractions[k] > 0.0)
            .map(|k| self.fractions[k] * self.compartment_pdf(k, x))
            .sum()
    }

    /// `(S(0,x), I(0,x), R(0,x))`; zero where μ̄ vanishes.
    pub fn shares(&self, x: &[f64]) -> [f64; 3] {
        let parts: Vec<f64> = (0..3)
            .map(|k| {
                if self.fractions[k] > 0.0 {
                    self.fractions[k] * self.compartment_pdf(k, x)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = parts.iter().sum();
        if total > 0.0 {
            [parts[0] / total, parts[1] / total, parts[2] / total]
        } else {
            [0.0; 3]
        }
    }

    /// Draws a position from π_k.
    pub fn sample_position<R: Rng>(&self, k: usize, domain: &DomainSpec, rng: &mut R) -> Vec<f64> {
        let mut x = match self.families[k] {
            DensityFamily::ExpPower { rate } => {
                let g: f64 = Gamma::new(self.dim as f64 / self.exponent, 1.0)
                    .expect("positive shape")
                    .sample(rng);
                let radius = (g / rate).powf(1.0 / self.exponent);
                domain
                    .random_direction(rng)
                    .into_iter()
                    .map(|u| u * radius)
                    .collect::<Vec<_>>()
            }
            DensityFamily::UniformBox { half_width } => (0..self.dim)
                .map(|_| half_width * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
        };
        if self.shape == Shape::HalfSpace {
            x[0] = x[0].abs();
        }
        x
    }
}
