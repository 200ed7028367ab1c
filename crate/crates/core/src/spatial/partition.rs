use std::collections::HashMap;

use super::{norm, DomainSpec, Shape};
use crate::error::{Error, Result};

/// Partition of R^d into translates of `(0, e]^d` with `e = a/√d` and
/// `a = r·sin α / (1 + sin α)` taken from the cone geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub dim: usize,
    pub shape: Shape,
    /// Edge constant `a` (diameter of each cube).
    pub edge_constant: f64,
    /// Cube side `a/√d`.
    pub side: f64,
    /// Smallest admissible radius for [`cells`](Self::cells): `M_1 ∨ a`.
    pub min_radius: f64,
}

/// One cube `∏ (k_i·e, (k_i + 1)·e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: Vec<i64>,
    pub center: Vec<f64>,
}

/// Ordered cells `𝔄_1..𝔄_q` contained in `D ∩ B(0, M)`.
#[derive(Debug, Clone)]
pub struct CellList {
    pub cells: Vec<Cell>,
    pub q: usize,
    pub radius: f64,
    pub side: f64,
    position: HashMap<Vec<i64>, usize>,
}

impl PartitionSpec {
    pub fn from_domain(domain: &DomainSpec) -> Self {
        let s = domain.cone_angle.sin();
        let a = domain.cone_radius * s / (1.0 + s);
        let side = a / (domain.dim as f64).sqrt();
        Self {
            dim: domain.dim,
            shape: domain.shape,
            edge_constant: a,
            side,
            min_radius: domain.ladder[0].max(a),
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    fn cell_in_domain(&self, index: &[i64]) -> bool {
        match self.shape {
            Shape::FullSpace => true,
            Shape::HalfSpace => index[0] >= 0,
        }
    }

    fn far_corner(&self, center: &[f64]) -> f64 {
        let half = 0.5 * self.side;
        center
            .iter()
            .map(|c| (c.abs() + half).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Cell containing `x` (cells are left-open, right-closed).
    pub fn cell_index_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .map(|c| (c / self.side).ceil() as i64 - 1)
            .collect()
    }

    pub fn cell_center(&self, index: &[i64]) -> Vec<f64> {
        index
            .iter()
            .map(|&k| (k as f64 + 0.5) * self.side)
            .collect()
    }

    /// Cells ordered by centre distance (ties lexicographic in the centre),
    /// truncated at `q(M) = inf{k ≥ 1 : 𝔄_{k+1} ⊄ B(0, M)}`.
    pub fn cells(&self, radius: f64) -> Result<CellList> {
        if radius < self.min_radius {
            return Err(Error::Parameter(format!(
                "partition radius {radius} below M_1 ∨ a = {}",
                self.min_radius
            )));
        }
        let reach = (radius / self.side).ceil() as i64 + 1;
        let d = self.dim;
        let mut all: Vec<Cell> = Vec::new();
        let mut idx = vec![-reach; d];
        'outer: loop {
            if self.cell_in_domain(&idx) {
                let center = self.cell_center(&idx);
                if norm(&center) <= radius + self.edge_constant {
                    all.push(Cell {
                        index: idx.clone(),
                        center,
                    });
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                if idx[i] < reach {
                    idx[i] += 1;
                    break;
                }
                idx[i] = -reach;
            }
        }
        all.sort_by(|a, b| {
            norm(&a.center)
                .total_cmp(&norm(&b.center))
                .then_with(|| {
                    a.center
                        .iter()
                        .zip(&b.center)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        });
        let q = all
            .iter()
            .position(|c| self.far_corner(&c.center) > radius)
            .unwrap_or(all.len());
        if q == 0 {
            return Err(Error::Parameter(format!(
                "no partition cell fits inside B(0, {radius})"
            )));
        }
        all.truncate(q);
        let position = all
            .iter()
            .enumerate()
            .map(|(k, c)| (c.index.clone(), k))
            .collect();
        Ok(CellList {
            cells: all,
            q,
            radius,
            side: self.side,
            position,
        })
    }

    /// Position (0-based) in `list` of a cell contained in the cone-ball at
    /// `y`, constructed from the inscribed ball around
    /// `u(y) = y + r/(1 + sin α)·l_y`.
    pub fn cell_in_cone_ball(
        &self,
        domain: &DomainSpec,
        list: &CellList,
        y: &[f64],
    ) -> Option<usize> {
        let axis = domain.direction(y, Some(list.radius));
        let s = domain.cone_angle.sin();
        let u: Vec<f64> = y
            .iter()
            .zip(&axis)
            .map(|(yi, li)| yi + domain.cone_radius / (1.0 + s) * li)
            .collect();
        let index = self.cell_index_of(&u);
        let pos = *list.position.get(&index)?;
        // cone ∩ ball is convex for α ≤ π/2: corners suffice
        let d = self.dim;
        for mask in 0..(1u32 << d) {
            let corner: Vec<f64> = (0..d)
                .map(|i| {
                    let lo = index[i] as f64 * self.side;
                    if mask >> i & 1 == 1 {
                        lo + self.side
                    } else {
                        lo
                    }
                })
                .collect();
            if !domain.in_cone_ball(y, &axis, &corner) {
                return None;
            }
        }
        Some(pos)
    }
}

impl CellList {
    pub fn position_of(&self, index: &[i64]) -> Option<usize> {
        self.position.get(index).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::DomainSpec;
    use std::f64::consts::PI;

    fn unit_partition(dim: usize, shape: Shape) -> PartitionSpec {
        PartitionSpec {
            dim,
            shape,
            edge_constant: (dim as f64).sqrt(),
            side: 1.0,
            min_radius: 1.0,
        }
    }

    /// Brute force: every integer cell whose closure lies in B(0, M).
    fn brute_inside(p: &PartitionSpec, m: f64, reach: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let d = p.dim;
        let total = (2 * reach + 1).pow(d as u32);
        for flat in 0..total {
            let mut rem = flat;
            let idx: Vec<i64> = (0..d)
                .map(|_| {
                    let k = rem % (2 * reach + 1);
                    rem /= 2 * reach + 1;
                    k - reach
                })
                .collect();
            if !p.cell_in_domain(&idx) {
                continue;
            }
            let inside = (0..(1u32 << d)).all(|mask| {
                let c: Vec<f64> = (0..d)
                    .map(|i| (idx[i] + (mask >> i & 1) as i64) as f64 * p.side)
                    .collect();
                norm(&c) <= m
            });
            if inside {
                out.push(idx);
            }
        }
        out
    }

    #[test]
    fn one_dimensional_example() {
        let p = unit_partition(1, Shape::FullSpace);
        let list = p.cells(2.5).unwrap();
        assert_eq!(list.q, 4);
        let mut idx: Vec<i64> = list.cells.iter().map(|c| c.index[0]).collect();
        assert_eq!(idx, vec![-1, 0, -2, 1]);
        idx.sort();
        assert_eq!(idx, brute_inside(&p, 2.5, 5).into_iter().map(|v| v[0]).collect::<Vec<_>>());
    }

    #[test]
    fn radius_below_threshold_rejected() {
        let p = PartitionSpec {
            min_radius: 2.0,
            ..unit_partition(1, Shape::FullSpace)
        };
        assert!(p.cells(1.5).is_err());
        let q = PartitionSpec {
            side: 5.0,
            edge_constant: 5.0,
            min_radius: 1.0,
            ..unit_partition(1, Shape::FullSpace)
        };
        assert!(matches!(q.cells(1.2), Err(Error::Parameter(_))));
    }

    #[test]
    fn returned_cells_inside_and_no_misses() {
        for (dim, shape) in [(1, Shape::HalfSpace), (2, Shape::FullSpace), (2, Shape::HalfSpace), (3, Shape::FullSpace)] {
            let p = unit_partition(dim, shape);
            for m in [2.0, 3.3, 4.7] {
                let list = p.cells(m).unwrap();
                let inside = brute_inside(&p, m, 7);
                let inner = brute_inside(&p, m - p.edge_constant, 7);
                for c in &list.cells {
                    assert!(inside.contains(&c.index), "{dim} {m} {:?}", c.index);
                }
                for idx in inner {
                    assert!(list.position_of(&idx).is_some(), "missed {idx:?}");
                }
                let dists: Vec<f64> = list.cells.iter().map(|c| norm(&c.center)).collect();
                assert!(dists.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn q_is_monotone() {
        let p = unit_partition(2, Shape::FullSpace);
        let mut prev = 0;
        for k in 0..20 {
            let q = p.cells(2.0 + 0.37 * k as f64).unwrap().q;
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn every_point_sees_a_cell_in_its_cone() {
        use rand::Rng;
        let mut r = crate::rng::stream(11, crate::rng::tag::MONTE_CARLO, 2);
        for shape in [Shape::FullSpace, Shape::HalfSpace] {
            for dim in [1, 2] {
                let dom = DomainSpec::new(dim, shape, PI / 6.0, 0.5, vec![2.0, 3.0]).unwrap();
                let p = PartitionSpec::from_domain(&dom);
                let list = p.cells(3.0).unwrap();
                for _ in 0..500 {
                    let mut y = dom.random_direction(&mut r);
                    let rad = 3.0 * r.random::<f64>().powf(1.0 / dim as f64);
                    y.iter_mut().for_each(|c| *c *= rad);
                    if shape == Shape::HalfSpace {
                        y[0] = y[0].abs();
                    }
                    let k = p.cell_in_cone_ball(&dom, &list, &y);
                    assert!(k.is_some_and(|k| k < list.q), "{shape:?} {dim} {y:?}");
                }
            }
        }
    }
}
