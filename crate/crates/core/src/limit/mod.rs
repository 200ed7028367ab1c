//! Deterministic limit densities on truncated domains.

mod cache;
mod discrepancy;
mod grid;
mod solver;

pub use cache::{load_weights, save_weights, weight_key};
pub use discrepancy::{apriori_check, l1_distance, pi_n, AprioriReport};
pub use grid::{Grid, WeightMatrix};
pub use solver::{solve, solve_cached, Field, GridSpec, LimitFields, LimitProblem, Scheme, TimeTables};

#[cfg(test)]
mod tests;
