//! Domain geometry, contact kernel, baseline density, hypercube partition and
//! the deterministic interaction weights.

mod bounds;
mod density;
mod domain;
mod kernel;
mod lattice;
mod partition;
mod weights;

pub use bounds::{
    ball_volume, dual_epsilon, epsilon_for, numeric_sup_lambda, numeric_sup_omega,
    subadditive_constants, OperatorBounds,
};
pub use density::{BaselineDensity, DensityFamily, Envelope};
pub use domain::{DomainSpec, Shape};
pub use kernel::{KernelFamily, KernelSpec};
pub use lattice::Lattice;
pub use partition::{Cell, CellList, PartitionSpec};
pub use weights::{WeightModel, NORMALIZER_FLOOR};
pub(crate) use weights::check_gamma;

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
