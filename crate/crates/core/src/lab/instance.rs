use crate::agent::{init_population, simulate, EmpiricalTrajectory, EventLog, Population, SimOptions};
use crate::error::Result;
use crate::infectivity::InfectivityModel;
use crate::limit::{solve, GridSpec, LimitFields, LimitProblem};
use crate::spatial::{BaselineDensity, DomainSpec, KernelSpec};

use super::suite::TestFunctionSuite;

/// Everything an experiment needs: the model, the solver grid and the
/// test functions.
#[derive(Debug, Clone)]
pub struct Instance {
    pub domain: DomainSpec,
    pub density: BaselineDensity,
    pub kernel: KernelSpec,
    pub infectivity: InfectivityModel,
    pub gamma: f64,
    /// Solver grid; its horizon is the horizon of every run.
    pub grid: GridSpec,
    pub suite: TestFunctionSuite,
    pub event_budget: Option<usize>,
}

impl Instance {
    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    pub fn problem(&self, radius: f64) -> LimitProblem<'_> {
        LimitProblem {
            density: &self.density,
            kernel: &self.kernel,
            infectivity: &self.infectivity,
            gamma: self.gamma,
            truncation: radius,
        }
    }

    pub fn solve(&self, radius: f64) -> Result<LimitFields> {
        solve(&self.problem(radius), &self.grid)
    }

    pub fn population(&self, n: usize, seed: u64) -> Result<Population> {
        init_population(&self.domain, &self.density, &self.infectivity, n, self.gamma, seed)
    }

    pub fn simulate(
        &self,
        pop: &Population,
        truncation: Option<f64>,
    ) -> Result<(EventLog, EmpiricalTrajectory)> {
        let opts = SimOptions {
            horizon: self.horizon(),
            truncation,
            event_budget: self.event_budget,
        };
        simulate(pop, &self.infectivity, &self.kernel, &opts)
    }
}
