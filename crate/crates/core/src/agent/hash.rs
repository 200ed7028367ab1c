use std::collections::HashMap;

/// Uniform-cell spatial hash for fixed-radius neighbour queries.
#[derive(Debug, Clone)]
pub(crate) struct SpatialHash {
    cell: f64,
    dim: usize,
    map: HashMap<Vec<i64>, Vec<u32>>,
}

impl SpatialHash {
    /// `cell` must be at least the query radius.
    pub fn new(dim: usize, cell: f64) -> Self {
        Self {
            cell,
            dim,
            map: HashMap::new(),
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    pub fn insert(&mut self, id: u32, x: &[f64]) {
        let k = self.key(x);
        self.map.entry(k).or_default().push(id);
    }

    /// Visits every stored id whose cell is adjacent to the cell of `x`;
    /// a superset of the ids within `cell` of `x`.
    pub fn for_each_candidate<F: FnMut(u32)>(&self, x: &[f64], mut f: F) {
        let base = self.key(x);
        let mut key = base.clone();
        let mut offset = vec![-1i64; self.dim];
        loop {
            for i in 0..self.dim {
                key[i] = base[i] + offset[i];
            }
            if let Some(ids) = self.map.get(key.as_slice()) {
                ids.iter().for_each(|&id| f(id));
            }
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if offset[i] < 1 {
                    offset[i] += 1;
                    break;
                }
                offset[i] = -1;
            }
        }
    }
}
