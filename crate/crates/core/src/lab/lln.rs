use rayon::prelude::*;

use super::instance::Instance;
use crate::agent::{measure_eval_values, Compartment};
use crate::error::{Error, Result};
use crate::limit::Field;

/// Minimum number of points of the time lattice.
pub const MIN_TIME_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LlnRow {
    pub compartment: Compartment,
    pub n: usize,
    pub seed: u64,
    /// `sup_{t, φ} |(μ̄_t^{·,N} − μ̄_t^{·}, φ)|`.
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub compartment: Compartment,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<LlnRow>,
    pub aggregates: Vec<Aggregate>,
    /// Least-squares slope of `log mean error` against `log N`.
    pub slopes: Vec<(Compartment, f64)>,
    /// `|1 − ∫ μ̄|` on the solver grid.
    pub quadrature_residual: f64,
    pub time_points: usize,
}

impl ConvergenceReport {
    pub fn aggregate(&self, c: Compartment, n: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.compartment == c && a.n == n)
    }

    pub fn slope(&self, c: Compartment) -> Option<f64> {
        self.slopes.iter().find(|s| s.0 == c).map(|s| s.1)
    }
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn field_of(c: Compartment) -> Option<Field> {
    match c {
        Compartment::S => Some(Field::S),
        Compartment::I => Some(Field::I),
        Compartment::R => Some(Field::R),
        Compartment::F => Some(Field::F),
        Compartment::Total => None,
    }
}

/// Replicates at every `(N, seed)`, each compared with the limit on the
/// largest truncated domain over `time_points` equally spaced times.
pub fn lln_experiment(
    inst: &Instance,
    ns: &[usize],
    seeds: &[u64],
    time_points: usize,
) -> Result<ConvergenceReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "population sizes must be non-empty and strictly increasing".into(),
        ));
    }
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    if time_points < MIN_TIME_POINTS {
        return Err(Error::Config(format!(
            "time lattice needs at least {MIN_TIME_POINTS} points (got {time_points})"
        )));
    }
    let fields = inst.solve(inst.domain.top())?;
    let steps = fields.steps();
    if steps + 1 < time_points {
        return Err(Error::Config(format!(
            "solver has {} time levels, fewer than the {time_points} requested",
            steps + 1
        )));
    }
    let ks: Vec<usize> = (0..time_points)
        .map(|j| (j as f64 * steps as f64 / (time_points - 1) as f64).round() as usize)
        .collect();
    let dim = inst.domain.dim;
    let grid_phi = inst.suite.tabulate(&fields.grid.nodes, dim);
    let ones = vec![1.0; fields.grid.len()];

    // limit[c][f][j]
    let limit: Vec<Vec<Vec<f64>>> = Compartment::ALL
        .iter()
        .map(|&c| {
            grid_phi
                .iter()
                .map(|phi| {
                    ks.iter()
                        .map(|&k| match field_of(c) {
                            Some(field) => fields.pairing(field, k, phi),
                            None => fields.grid.pairing(phi, &ones),
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let quadrature_residual = (1.0 - fields.grid.pairing(&ones, &ones)).abs();

    let jobs: Vec<(usize, u64)> = ns
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<Vec<LlnRow>> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let pop = inst.population(n, seed)?;
            let (_, traj) = inst.simulate(&pop, None)?;
            let phi = inst.suite.tabulate(&pop.positions, dim);
            Ok(Compartment::ALL
                .iter()
                .enumerate()
                .map(|(ci, &c)| {
                    let mut sup = 0.0f64;
                    for (fi, values) in phi.iter().enumerate() {
                        for (j, &k) in ks.iter().enumerate() {
                            let emp = measure_eval_values(&traj, c, fields.time(k), values);
                            sup = sup.max((emp - limit[ci][fi][j]).abs());
                        }
                    }
                    LlnRow {
                        compartment: c,
                        n,
                        seed,
                        sup_error: sup,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<LlnRow> = results.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.compartment, a.n, a.seed)
            .cmp(&(b.compartment, b.n, b.seed))
    });

    let mut aggregates = Vec::new();
    let mut slopes = Vec::new();
    for c in Compartment::ALL {
        let mut means = Vec::new();
        for &n in ns {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.compartment == c && r.n == n)
                .map(|r| r.sup_error)
                .collect();
            let m = errs.iter().sum::<f64>() / errs.len() as f64;
            let sd = if errs.len() > 1 {
                (errs.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / (errs.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            means.push(m);
            aggregates.push(Aggregate {
                compartment: c,
                n,
                mean: m,
                sd,
            });
        }
        if ns.len() > 1 {
            let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
            slopes.push((c, fit_slope(&xs, &means)));
        }
    }
    Ok(ConvergenceReport {
        rows,
        aggregates,
        slopes,
        quadrature_residual,
        time_points,
    })
}
