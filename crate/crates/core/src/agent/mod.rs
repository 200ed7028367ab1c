//! Exact simulation of the N-individual model and evaluation of its empirical
//! measures.

mod hash;
mod measure;
mod population;
mod sim;

pub use measure::{
    coupling_discrepancy, measure_eval, measure_eval_values, Compartment, EmpiricalTrajectory,
    Snapshot,
};
pub use population::{init_population, InitialState, Population};
pub use sim::{
    force_of_infection, simulate, Event, EventLog, Interaction, SimOptions, Transition,
    BUDGET_PER_INDIVIDUAL,
};
