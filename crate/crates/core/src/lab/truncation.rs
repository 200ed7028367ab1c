use rayon::prelude::*;

use super::instance::Instance;
use crate::agent::coupling_discrepancy;
use crate::error::{Error, Result};
use crate::limit::{l1_distance, pi_n};
use crate::spatial::{Lattice, WeightModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    /// 1-based rung index.
    pub n: usize,
    pub radius: f64,
    pub l1_distance: f64,
    pub pi_n: f64,
    pub coupling_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    pub population: usize,
    pub seeds: usize,
}

/// Per rung of the ladder: distance of the limit on `D_n` to the limit on
/// the largest domain, `Π_n`, and the mean coupling discrepancy of
/// truncated against full runs of `population` individuals.
pub fn truncation_experiment(
    inst: &Instance,
    population: usize,
    seeds: &[u64],
) -> Result<TruncationReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let ladder = &inst.domain.ladder;
    let solutions = ladder
        .iter()
        .map(|&m| inst.solve(m))
        .collect::<Result<Vec<_>>>()?;
    let top = solutions.last().expect("non-empty ladder");
    let lattice = Lattice::new(inst.domain.dim, inst.domain.shape, inst.grid.spacing);
    let model = WeightModel::new(&inst.kernel, &inst.density, lattice, inst.gamma, None)?;
    let outer_pad = inst.kernel.support + inst.grid.spacing;
    let pis = ladder
        .iter()
        .map(|&m| pi_n(&model, m, m + outer_pad))
        .collect::<Result<Vec<_>>>()?;

    let couplings: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let pop = inst.population(population, seed)?;
            let (full, _) = inst.simulate(&pop, None)?;
            ladder
                .iter()
                .map(|&m| {
                    let (trunc, _) = inst.simulate(&pop, Some(m))?;
                    coupling_discrepancy(&full, &trunc, m)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows = ladder
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            Ok(TruncationRow {
                n: k + 1,
                radius: m,
                l1_distance: l1_distance(&solutions[k], top)?,
                pi_n: pis[k],
                coupling_mean: couplings.iter().map(|c| c[k]).sum::<f64>() / seeds.len() as f64,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TruncationReport {
        rows,
        population,
        seeds: seeds.len(),
    })
}
