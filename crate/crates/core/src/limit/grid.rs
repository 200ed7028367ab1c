use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spatial::{BaselineDensity, KernelSpec, Lattice, WeightModel};

pub(crate) fn lattice_key(z: &[f64], h: f64) -> Vec<i64> {
    z.iter().map(|c| (c / h - 0.5).round() as i64).collect()
}

/// Lattice nodes of `D_n` carrying positive baseline density.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lattice: Lattice,
    pub radius: f64,
    /// Row-major node coordinates.
    pub nodes: Vec<f64>,
    pub mu: Vec<f64>,
    /// `(S(0,x), I(0,x), R(0,x))` per node.
    pub shares: Vec<[f64; 3]>,
    index: HashMap<Vec<i64>, usize>,
}

impl Grid {
    pub fn new(density: &BaselineDensity, lattice: Lattice, radius: f64) -> Result<Self> {
        let d = lattice.dim;
        let mut nodes = Vec::new();
        let mut mu = Vec::new();
        let mut shares = Vec::new();
        let mut index = HashMap::new();
        for z in lattice.nodes_in_ball(radius).chunks(d) {
            let m = density.mu(z);
            if m > 0.0 {
                index.insert(lattice_key(z, lattice.spacing), mu.len());
                nodes.extend_from_slice(z);
                mu.push(m);
                shares.push(density.shares(z));
            }
        }
        if mu.is_empty() {
            return Err(Error::Parameter(format!(
                "no lattice node of spacing {} with positive density inside radius {radius}",
                lattice.spacing
            )));
        }
        Ok(Self {
            lattice,
            radius,
            nodes,
            mu,
            shares,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.lattice.dim;
        &self.nodes[i * d..(i + 1) * d]
    }

    pub fn index_of(&self, z: &[f64]) -> Option<usize> {
        self.index.get(&lattice_key(z, self.lattice.spacing)).copied()
    }

    /// `∫ φ g μ̄` by the grid rule, with `φ` given at the nodes.
    pub fn pairing(&self, phi: &[f64], g: &[f64]) -> f64 {
        let vol = self.lattice.cell_volume();
        phi.iter()
            .zip(g)
            .zip(&self.mu)
            .map(|((p, v), m)| p * v * m)
            .sum::<f64>()
            * vol
    }
}

/// Sparse rows `W[x][y] = Λ_n(x, y)·h^d` over the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl WeightMatrix {
    pub fn build(grid: &Grid, kernel: &KernelSpec, density: &BaselineDensity, gamma: f64) -> Result<Self> {
        let model = WeightModel::new(kernel, density, grid.lattice, gamma, Some(grid.radius))?;
        let inv: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|j| model.inverse_normalizer_power(grid.node(j)))
            .collect::<Result<_>>()?;
        let vol = grid.lattice.cell_volume();
        let rows: Vec<Vec<(u32, f64)>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let x = grid.node(i);
                let mut row = Vec::new();
                grid.lattice.for_each_node_in_ball(x, kernel.support, |y| {
                    if let Some(j) = grid.index_of(y) {
                        let k = kernel.eval_unchecked(x, y);
                        if k > 0.0 {
                            row.push((j as u32, k * grid.mu[j] * inv[j] * vol));
                        }
                    }
                });
                row
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(grid.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .into_par_iter()
            .map(|i| self.row_dot(i, v))
            .collect()
    }

    #[inline]
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .map(|(&j, w)| w * v[j as usize])
            .sum()
    }

    /// `max_x Σ_y W[x][y]`, the grid value of `sup_x ∫ Λ_n(x, y) dy`.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.rows())
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }
}
