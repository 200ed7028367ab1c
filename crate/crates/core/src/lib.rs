//! Individual-based spatial SIR epidemics with age-dependent random
//! infectivity: exact stochastic simulation, the deterministic
//! large-population limit on truncated domains, and experiments comparing the
//! two.

pub mod agent;
pub mod config;
pub mod error;
pub mod infectivity;
pub mod lab;
pub mod limit;
pub mod pipeline;
pub mod rng;
pub mod spatial;

pub use error::{Error, Result};
