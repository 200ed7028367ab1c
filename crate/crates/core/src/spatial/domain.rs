use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dist, norm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// All of R^d.
    FullSpace,
    /// `{x : x_1 >= 0}`.
    HalfSpace,
}

/// The spatial domain D, its interior-cone parameters and the truncation
/// ladder `M_1 < M_2 < ...` defining `D_n = D ∩ B(0, M_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    pub shape: Shape,
    /// Half-opening angle of the interior cone, in radians.
    pub cone_angle: f64,
    /// Radius of the interior cone-ball.
    pub cone_radius: f64,
    pub ladder: Vec<f64>,
}

impl DomainSpec {
    pub fn new(
        dim: usize,
        shape: Shape,
        cone_angle: f64,
        cone_radius: f64,
        ladder: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !(cone_angle > 0.0 && cone_angle < std::f64::consts::PI) {
            return Err(Error::Config("cone angle must lie in (0, pi)".into()));
        }
        if !(cone_radius > 0.0) {
            return Err(Error::Config("cone radius must be positive".into()));
        }
        if ladder.is_empty() {
            return Err(Error::Config("truncation ladder is empty".into()));
        }
        if ladder.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "truncation radii M_n must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            dim,
            shape,
            cone_angle,
            cone_radius,
            ladder,
        })
    }

    /// Checks `M_1 > support radius` of the kernel.
    pub fn check_ladder_against(&self, support: f64) -> Result<()> {
        if self.ladder[0] > support {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "M_1 = {} must exceed the kernel support radius {}",
                self.ladder[0], support
            )))
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            })
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.shape {
            Shape::FullSpace => true,
            Shape::HalfSpace => x[0] >= 0.0,
        }
    }

    /// Membership in `D ∩ B(0, M)`, or in `D` when `truncation` is `None`.
    pub fn contains_truncated(&self, x: &[f64], truncation: Option<f64>) -> bool {
        self.contains(x) && truncation.is_none_or(|m| norm(x) <= m)
    }

    /// Cone axis `l_y` such that the cone-ball at `y` stays inside
    /// `D ∩ B(0, M)` (or `D`).
    pub fn direction(&self, y: &[f64], truncation: Option<f64>) -> Vec<f64> {
        let d = self.dim;
        let r = self.cone_radius;
        let ny = norm(y);
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        let inward: Vec<f64> = if ny > 0.0 {
            y.iter().map(|v| -v / ny).collect()
        } else {
            e1.clone()
        };
        let ball_slack = truncation.is_none_or(|m| ny + r <= m);
        match self.shape {
            Shape::FullSpace => {
                if ball_slack {
                    e1
                } else {
                    inward
                }
            }
            Shape::HalfSpace => {
                if ball_slack {
                    e1
                } else if y[0] >= r {
                    inward
                } else {
                    let v: Vec<f64> = e1.iter().zip(&inward).map(|(a, b)| a + b).collect();
                    let nv = norm(&v);
                    if nv > 1e-12 {
                        v.iter().map(|c| c / nv).collect()
                    } else {
                        e1
                    }
                }
            }
        }
    }

    /// `z ∈ C(y, l, α) ∩ B(y, r)`.
    pub fn in_cone_ball(&self, y: &[f64], axis: &[f64], z: &[f64]) -> bool {
        let rho = dist(z, y);
        if rho > self.cone_radius * (1.0 + 1e-12) {
            return false;
        }
        if rho == 0.0 {
            return true;
        }
        let dot: f64 = z.iter().zip(y).zip(axis).map(|((a, b), l)| (a - b) * l).sum();
        dot >= self.cone_angle.cos() * rho - 1e-12 * self.cone_radius
    }

    /// Rejection-sampling check that the cone-ball at `y` lies in the
    /// (truncated) domain. Returns the number of sampled cone-ball points that
    /// fell outside.
    pub fn cone_violations<R: Rng>(
        &self,
        y: &[f64],
        truncation: Option<f64>,
        samples: usize,
        rng: &mut R,
    ) -> usize {
        let axis = self.direction(y, truncation);
        let mut violations = 0;
        let mut accepted = 0;
        let mut z = vec![0.0; self.dim];
        while accepted < samples {
            for (k, zk) in z.iter_mut().enumerate() {
                *zk = y[k] + self.cone_radius * (2.0 * rng.random::<f64>() - 1.0);
            }
            if !self.in_cone_ball(y, &axis, &z) {
                continue;
            }
            accepted += 1;
            if !self.contains_truncated(&z, truncation) {
                violations += 1;
            }
        }
        violations
    }

    /// Uniform point on the unit sphere.
    pub(crate) fn random_direction<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.dim)
                .map(|_| StandardNormal.sample(rng))
                .collect();
            let n = norm(&v);
            if n > 1e-300 {
                return v.into_iter().map(|c| c / n).collect();
            }
        }
    }

    /// Largest rung of the ladder.
    pub fn top(&self) -> f64 {
        *self.ladder.last().expect("ladder checked non-empty")
    }
}
