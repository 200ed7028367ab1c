use rayon::prelude::*;

use super::grid::Grid;
use super::solver::{Field, LimitFields};
use crate::error::{Error, Result};
use crate::spatial::WeightModel;

/// `Π_n = ∫_D |∫_{D_n} (Λ(x, y) − Λ_n(x, y)) dy| μ̄(x) dx` on the lattice of
/// `model`, whose own truncation is ignored. `outer` is the radius of the
/// quadrature region for `x` and must cover `B(0, M_n + R̄)`.
pub fn pi_n(model: &WeightModel<'_>, radius: f64, outer: f64) -> Result<f64> {
    let support = model.kernel.support;
    if outer < radius + support {
        return Err(Error::Parameter(format!(
            "outer quadrature radius {outer} does not cover B(0, M_n + R) = B(0, {})",
            radius + support
        )));
    }
    if model.gamma == 0.0 {
        return Ok(0.0);
    }
    let full = model.with_truncation(None);
    let trunc = model.with_truncation(Some(radius));
    let inner = Grid::new(model.density, model.lattice, radius)?;
    // Λ − Λ_n vanishes unless B(y, R̄) leaves D_n
    let diff: Vec<f64> = (0..inner.len())
        .into_par_iter()
        .map(|j| {
            let y = inner.node(j);
            if crate::spatial::norm(y) + support <= radius {
                return Ok(0.0);
            }
            Ok(inner.mu[j]
                * (full.inverse_normalizer_power(y)? - trunc.inverse_normalizer_power(y)?))
        })
        .collect::<Result<_>>()?;
    let outer_grid = Grid::new(model.density, model.lattice, outer)?;
    let vol = model.lattice.cell_volume();
    let total: f64 = (0..outer_grid.len())
        .into_par_iter()
        .map(|i| {
            let x = outer_grid.node(i);
            let mut acc = 0.0;
            model.lattice.for_each_node_in_ball(x, support, |y| {
                if let Some(j) = inner.index_of(y) {
                    if diff[j] != 0.0 {
                        acc += model.kernel.eval_unchecked(x, y) * diff[j];
                    }
                }
            });
            (acc * vol).abs() * outer_grid.mu[i]
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total * vol)
}

/// Margins of the a-priori bounds `‖S(t)‖_∞ ≤ ‖S(0)‖_∞` and
/// `‖𝔉(t)‖_∞ ≤ λ*‖I(0)‖_∞ e^{λ* Ĉ t}`, minimised over the time lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport {
    /// `Ĉ = sup_x ∫ Λ_n(x, y) dy` on the grid.
    pub c_hat: f64,
    pub s_margin: f64,
    pub f_margin: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn apriori_check(fields: &LimitFields, cap: f64) -> Result<AprioriReport> {
    let c_hat = fields.weights.max_row_sum();
    let s0 = sup(&fields.s[0]);
    let i0 = sup(&fields.i[0]);
    let mut s_margin = f64::INFINITY;
    let mut f_margin = f64::INFINITY;
    for k in 0..=fields.steps() {
        s_margin = s_margin.min(s0 - sup(&fields.s[k]));
        let bound = cap * i0 * (cap * c_hat * fields.time(k)).exp();
        f_margin = f_margin.min(bound - sup(&fields.f[k]));
    }
    let slack = 1e-12;
    if s_margin < -slack || f_margin < -slack * (1.0 + cap) {
        return Err(Error::SolverDefect(format!(
            "a-priori bound violated: S margin {s_margin:e}, F margin {f_margin:e}"
        )));
    }
    Ok(AprioriReport {
        c_hat,
        s_margin,
        f_margin,
    })
}

/// `max_k Σ_{S,𝔉,I,R} ∫ |a − b| μ̄` over the nodes of `b`, where `a` lives
/// on a smaller domain and is extended outside it by the transmission-free
/// solution.
pub fn l1_distance(a: &LimitFields, b: &LimitFields) -> Result<f64> {
    if a.grid.lattice != b.grid.lattice || a.dt != b.dt || a.steps() != b.steps() {
        return Err(Error::Usage(
            "L1 distance needs solutions on the same lattice and time grid".into(),
        ));
    }
    if a.truncation > b.truncation {
        return Err(Error::Usage(
            "first solution must live on the smaller domain".into(),
        ));
    }
    let vol = b.grid.lattice.cell_volume();
    let t = &a.tables;
    let map: Vec<Option<usize>> = (0..b.grid.len())
        .map(|j| a.grid.index_of(b.grid.node(j)))
        .collect();
    let per_step: Vec<f64> = (0..=b.steps())
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for (j, slot) in map.iter().enumerate() {
                let [s0, i0, r0] = b.grid.shares[j];
                for field in Field::ALL {
                    let va = match slot {
                        Some(x) => a.field(field, k)[*x],
                        None => match field {
                            Field::S => s0,
                            Field::F => t.lam0[k] * i0,
                            Field::I => t.surv0[k] * i0,
                            Field::R => r0 + t.cdf0[k] * i0,
                        },
                    };
                    acc += (va - b.field(field, k)[j]).abs() * b.grid.mu[j];
                }
            }
            acc * vol
        })
        .collect();
    Ok(per_step.into_iter().fold(0.0, f64::max))
}
