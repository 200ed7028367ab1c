use super::Shape;

/// Cell-centred quadrature lattice `{(k + 1/2)·h : k ∈ Z^d}` restricted to D.
///
/// Every grid in the crate is a subset of this lattice, so integrals over
/// nested truncated domains share nodes and summation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub dim: usize,
    pub shape: Shape,
    pub spacing: f64,
}

impl Lattice {
    pub fn new(dim: usize, shape: Shape, spacing: f64) -> Self {
        assert!(spacing > 0.0, "lattice spacing must be positive");
        Self {
            dim,
            shape,
            spacing,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    #[inline]
    pub fn coord(&self, k: i64) -> f64 {
        (k as f64 + 0.5) * self.spacing
    }

    /// Calls `f` on every lattice node of D with `‖z − center‖ ≤ radius`, in
    /// lexicographic index order.
    pub fn for_each_node_in_ball<F: FnMut(&[f64])>(&self, center: &[f64], radius: f64, mut f: F) {
        let h = self.spacing;
        let d = self.dim;
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for i in 0..d {
            lo[i] = ((center[i] - radius) / h - 0.5).ceil() as i64;
            hi[i] = ((center[i] + radius) / h - 0.5).floor() as i64;
        }
        if self.shape == Shape::HalfSpace {
            lo[0] = lo[0].max(0);
        }
        if lo.iter().zip(&hi).any(|(l, u)| l > u) {
            return;
        }
        let r2 = radius * radius;
        let mut idx = lo.clone();
        let mut z = vec![0.0; d];
        loop {
            let mut d2 = 0.0;
            for i in 0..d {
                z[i] = self.coord(idx[i]);
                d2 += (z[i] - center[i]) * (z[i] - center[i]);
            }
            if d2 <= r2 {
                f(&z);
            }
            // odometer, last coordinate fastest
            let mut i = d;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if idx[i] < hi[i] {
                    idx[i] += 1;
                    break;
                }
                idx[i] = lo[i];
            }
        }
    }

    /// Flat coordinates of all nodes in `D ∩ B(0, radius)`.
    pub fn nodes_in_ball(&self, radius: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.for_each_node_in_ball(&vec![0.0; self.dim], radius, |z| out.extend_from_slice(z));
        out
    }
}
