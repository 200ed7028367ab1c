//! Explicit operator-norm constants for Λ and Ω and their numerical
//! counterparts.
//!
//! With `m` the cone-ball volume, `(c̲, C, R̄)` from the kernel and
//! `(a, δ, c0, C0)` from the envelope, the chain
//! `ν(y) ≥ c̲·c0·m·e^{−a(‖y‖+r)^δ}` and
//! `(s + t)^δ ≤ f·s^δ + c·t^δ` give
//!
//! * `sup_x ∫ Λ(x,y) dy ≤ C·C0·(c̲c0m)^{−γ}·e^{aγ c1 r^δ}·|B(R̄)|`
//! * `sup_y ∫ Ω(x,y) dx ≤ C·C0·(c̲c0m)^{−γ}·e^{aγ c1 r^δ}·e^{aγ f1 c2 R̄^δ}·|B(R̄)|`
//!
//! where `(f1, c1)` use ε₁ and `(f2, c2)` use ε₂ with `γ·f1·f2 < 1`.

use std::collections::HashMap;

use rayon::prelude::*;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;

use super::{DomainSpec, Envelope, KernelSpec, WeightModel};
use crate::error::{Error, Result};

/// `ε` with `γ(1 + ε) < 1`: midpoint of the admissible interval, 1 when γ = 0.
pub fn epsilon_for(gamma: f64) -> f64 {
    if gamma > 0.0 {
        (1.0 / gamma - 1.0) / 2.0
    } else {
        1.0
    }
}

/// Second slack, chosen so that `γ(1 + ε₁)(1 + ε₂) < 1`.
pub fn dual_epsilon(gamma: f64) -> f64 {
    (1.0 - gamma) / (2.0 * (1.0 + gamma))
}

/// `(f, c)` with `(s + t)^δ ≤ f·s^δ + c·t^δ` for all `s, t ≥ 0`.
///
/// For δ ≤ 1 this is `(1, 1)` (concavity); otherwise `f = 1 + ε` and
/// `c = (1 + 1/θ)^δ` with `θ = (1 + ε)^{1/δ} − 1`.
pub fn subadditive_constants(eps: f64, delta: f64) -> (f64, f64) {
    if delta <= 1.0 {
        (1.0, 1.0)
    } else {
        let theta = (1.0 + eps).powf(1.0 / delta) - 1.0;
        (1.0 + eps, (1.0 + 1.0 / theta).powf(delta))
    }
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) * radius.powf(d) / gamma(d / 2.0 + 1.0)
}

/// Volume of `C(y, l, α) ∩ B(y, r)`.
pub fn cone_ball_volume(dim: usize, angle: f64, radius: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    if dim == 1 {
        return if angle < FRAC_PI_2 { radius } else { 2.0 * radius };
    }
    let d = dim as f64;
    let s2 = angle.sin().powi(2);
    let cap = 0.5 * beta_reg((d - 1.0) / 2.0, 0.5, s2);
    let frac = if angle <= FRAC_PI_2 { cap } else { 1.0 - cap };
    frac * ball_volume(dim, radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorBounds {
    pub lambda_bound: f64,
    pub omega_bound: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub cone_ball_volume: f64,
}

impl OperatorBounds {
    pub fn compute(
        kernel: &KernelSpec,
        envelope: &Envelope,
        domain: &DomainSpec,
        gamma: f64,
    ) -> Result<Self> {
        super::weights::check_gamma(gamma)?;
        if domain.cone_radius > kernel.lower_radius {
            return Err(Error::Config(format!(
                "cone radius {} exceeds kernel lower-bound radius {}",
                domain.cone_radius, kernel.lower_radius
            )));
        }
        let (a, delta) = (envelope.rate, envelope.exponent);
        let m = cone_ball_volume(domain.dim, domain.cone_angle, domain.cone_radius);
        let eps1 = epsilon_for(gamma);
        let eps2 = dual_epsilon(gamma);
        let (f1, c1) = subadditive_constants(eps1, delta);
        let (_, c2) = subadditive_constants(eps2, delta);
        let common = kernel.amplitude * envelope.c1
            * (kernel.floor * envelope.c0 * m).powf(-gamma)
            * (a * gamma * c1 * domain.cone_radius.powf(delta)).exp()
            * ball_volume(domain.dim, kernel.support);
        let omega_extra = (a * gamma * f1 * c2 * kernel.support.powf(delta)).exp();
        Ok(Self {
            lambda_bound: common,
            omega_bound: common * omega_extra,
            eps1,
            eps2,
            cone_ball_volume: m,
        })
    }
}

fn lattice_key(z: &[f64], h: f64) -> Vec<i64> {
    z.iter().map(|c| (c / h - 0.5).round() as i64).collect()
}

/// Per-node data `(μ̄(y), ν(y)^{−γ})` on `D ∩ B(0, radius)` (∩ D_n).
fn node_table(model: &WeightModel<'_>, radius: f64) -> Result<HashMap<Vec<i64>, (f64, f64)>> {
    let h = model.lattice.spacing;
    let radius = model.truncation.map_or(radius, |m| m.min(radius));
    let nodes = model.lattice.nodes_in_ball(radius);
    let dim = model.lattice.dim;
    let rows: Result<Vec<_>> = nodes
        .par_chunks(dim)
        .filter(|y| model.density.mu(y) > 0.0)
        .map(|y| {
            Ok((
                lattice_key(y, h),
                (model.density.mu(y), model.inverse_normalizer_power(y)?),
            ))
        })
        .collect();
    Ok(rows?.into_iter().collect())
}

/// `max_x Σ_y Λ(x, y)·h^d` over lattice nodes `x ∈ D ∩ B(0, radius)`.
pub fn numeric_sup_lambda(model: &WeightModel<'_>, radius: f64) -> Result<f64> {
    let table = node_table(model, radius + model.kernel.support)?;
    let h = model.lattice.spacing;
    let xs = model.lattice.nodes_in_ball(radius);
    let sup = xs
        .par_chunks(model.lattice.dim)
        .map(|x| {
            let mut acc = 0.0;
            model
                .lattice
                .for_each_node_in_ball(x, model.kernel.support, |y| {
                    if let Some(&(mu, inv)) = table.get(&lattice_key(y, h)) {
                        acc += model.kernel.eval_unchecked(x, y) * mu * inv;
                    }
                });
            acc * model.lattice.cell_volume()
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// `max_y Σ_x Ω(x, y)·h^d` over lattice nodes `y ∈ D ∩ B(0, radius)` (∩ D_n).
pub fn numeric_sup_omega(model: &WeightModel<'_>, radius: f64) -> Result<f64> {
    let table = node_table(model, radius)?;
    let sup = table
        .par_iter()
        .map(|(key, &(_, inv))| {
            let y: Vec<f64> = key.iter().map(|&k| model.lattice.coord(k)).collect();
            let mut acc = 0.0;
            model
                .lattice
                .for_each_node_in_ball(&y, model.kernel.support, |x| {
                    acc += model.kernel.eval_unchecked(x, &y) * model.density.mu(x);
                });
            acc * inv * model.lattice.cell_volume()
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn cone_ball_volumes() {
        assert!((cone_ball_volume(2, PI / 6.0, 0.5) - PI / 6.0 * 0.25).abs() < 1e-12);
        let v3 = 2.0 * PI * (1.0 - (0.4f64).cos()) / 3.0;
        assert!((cone_ball_volume(3, 0.4, 1.0) - v3).abs() < 1e-10);
        assert!((cone_ball_volume(3, PI - 0.4, 1.0) - (4.0 * PI / 3.0 - v3)).abs() < 1e-10);
        assert_eq!(cone_ball_volume(1, 0.3, 0.5), 0.5);
        assert!((ball_volume(2, 2.0) - 4.0 * PI).abs() < 1e-12);
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn epsilons_keep_products_below_one() {
        for g in [0.0, 0.1, 0.5, 0.9, 0.99] {
            let e1 = epsilon_for(g);
            let e2 = dual_epsilon(g);
            assert!(g * (1.0 + e1) < 1.0 || g == 0.0);
            assert!(g * (1.0 + e1) * (1.0 + e2) < 1.0);
        }
        assert_eq!(epsilon_for(0.0), 1.0);
        assert_eq!(epsilon_for(0.5), 0.5);
    }

    proptest! {
        #[test]
        fn concave_power_subadditive(x in 1e-6f64..50.0, y in 1e-6f64..50.0, delta in 0.05f64..=1.0) {
            prop_assert!((x + y).powf(delta) <= (x.powf(delta) + y.powf(delta)) * (1.0 + 1e-12));
        }

        #[test]
        fn convex_power_bound(x in 1e-6f64..50.0, y in 1e-6f64..50.0, delta in 1.0f64..6.0, eps in 0.01f64..3.0) {
            let (f, c) = subadditive_constants(eps, delta);
            let lhs = (x + y).powf(delta);
            prop_assert!(lhs <= (f * x.powf(delta) + c * y.powf(delta)) * (1.0 + 1e-10));
        }
    }
}
