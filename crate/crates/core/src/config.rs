//! TOML run configuration.
//!
//! ```toml
//! seed = 1                        # master seed, at most 2^63 - 1
//!
//! [domain]
//! dim = 1
//! shape = "full-space"            # or "half-space"
//! cone_angle = 0.5                # radians
//! cone_radius = 0.5
//! ladder = [2.0, 3.0, 4.0, 6.0]   # M_1 < M_2 < ...
//!
//! [kernel]
//! family = "indicator"            # or "tent"
//! amplitude = 1.0
//! support = 1.0
//! lower_radius = 1.0
//! # floor = 1.0                   # optional, at most the derived floor
//!
//! [density]
//! exponent = 1.0
//! fractions = [0.9, 0.08, 0.02]   # S, I, R
//! susceptible = { family = "exp-power", rate = 1.0 }
//! infected = { family = "exp-power", rate = 2.0 }
//! recovered = { family = "exp-power", rate = 1.0 }   # or uniform-box with half_width
//!
//! [infectivity]
//! cap = 1.5
//! initial = { curve = { family = "constant", level = 1.5 }, duration = { law = "exponential", rate = 1.0 } }
//! new = { curve = { family = "constant", level = 1.5 }, duration = { law = "exponential", rate = 1.0 } }
//!
//! [simulation]
//! population = 2000
//! horizon = 6.0
//! gamma = 0.5
//! # event_budget = 100000
//! # rung = 2                      # run on D_2 instead of D
//!
//! [solver]
//! spacing = 0.05
//! dt = 0.02
//! scheme = "euler"                # or "trapezoid"
//! # rung = 4                      # defaults to the top rung
//! csv_every = 10
//!
//! [experiment]
//! populations = [250, 1000, 4000]
//! seeds = 20
//! time_points = 51
//! coupling_population = 1000
//! suite = { centers = [-1.0, 0.0, 1.0], width = 0.5 }
//! ```
//!
//! Curve families: `constant {level}`, `piecewise {levels}`,
//! `exp-decay {peak, rate}`. Duration laws: `fixed {eta}`,
//! `exponential {rate}`, `uniform {lo, hi}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infectivity::{CohortLaw, InfectivityModel};
use crate::lab::{Instance, SuiteParams, TestFunctionSuite};
use crate::limit::{GridSpec, Scheme};
use crate::spatial::{BaselineDensity, DensityFamily, DomainSpec, KernelFamily, KernelSpec, Shape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub dim: usize,
    pub shape: Shape,
    pub cone_angle: f64,
    pub cone_radius: f64,
    pub ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub family: KernelFamily,
    pub amplitude: f64,
    pub support: f64,
    pub lower_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityBlock {
    pub exponent: f64,
    pub fractions: [f64; 3],
    pub susceptible: DensityFamily,
    pub infected: DensityFamily,
    pub recovered: DensityFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfectivityBlock {
    pub cap: f64,
    pub initial: CohortLaw,
    pub new: CohortLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub population: usize,
    pub horizon: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_budget: Option<usize>,
    /// 1-based rung of the ladder; absent means the full domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rung: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub spacing: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// 1-based rung of the ladder; absent means the top rung.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rung: Option<usize>,
    #[serde(default = "one")]
    pub csv_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub populations: Vec<usize>,
    pub seeds: usize,
    #[serde(default = "default_time_points")]
    pub time_points: usize,
    pub coupling_population: usize,
    #[serde(default)]
    pub suite: SuiteParams,
}

fn default_time_points() -> usize {
    51
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            populations: vec![250, 1000, 4000],
            seeds: 20,
            time_points: default_time_points(),
            coupling_population: 1000,
            suite: SuiteParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainBlock,
    pub kernel: KernelBlock,
    pub density: DensityBlock,
    pub infectivity: InfectivityBlock,
    pub simulation: SimulationBlock,
    pub solver: SolverBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

/// Parses and validates; every violated clause is listed in the error.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("syntax error: {e}")))?;
    let violations = cfg.violations();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(violations.join("; ")))
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
    }

    pub fn build_domain(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        DomainSpec::new(d.dim, d.shape, d.cone_angle, d.cone_radius, d.ladder.clone())
    }

    pub fn build_kernel(&self) -> Result<KernelSpec> {
        let k = &self.kernel;
        let spec = KernelSpec::new(k.family, k.amplitude, k.support, k.lower_radius)?;
        match k.floor {
            Some(f) => spec.with_floor(f),
            None => Ok(spec),
        }
    }

    pub fn build_density(&self, domain: &DomainSpec) -> Result<BaselineDensity> {
        let d = &self.density;
        BaselineDensity::new(
            domain,
            d.exponent,
            d.fractions,
            [d.susceptible, d.infected, d.recovered],
        )
    }

    pub fn build_infectivity(&self) -> Result<InfectivityModel> {
        let i = &self.infectivity;
        InfectivityModel::new(i.cap, i.initial.clone(), i.new.clone())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            spacing: self.solver.spacing,
            dt: self.solver.dt,
            horizon: self.simulation.horizon,
            scheme: self.solver.scheme,
        }
    }

    pub fn instance(&self) -> Result<Instance> {
        let domain = self.build_domain()?;
        let density = self.build_density(&domain)?;
        Ok(Instance {
            suite: TestFunctionSuite::new(domain.dim, &self.experiment.suite)?,
            kernel: self.build_kernel()?,
            infectivity: self.build_infectivity()?,
            gamma: self.simulation.gamma,
            grid: self.grid(),
            event_budget: self.simulation.event_budget,
            domain,
            density,
        })
    }

    fn rung_radius(&self, rung: usize) -> Result<f64> {
        self.domain
            .ladder
            .get(rung.wrapping_sub(1))
            .copied()
            .ok_or_else(|| {
                Error::Config(format!(
                    "rung {rung} outside the ladder of {} radii",
                    self.domain.ladder.len()
                ))
            })
    }

    /// Truncation radius of the simulate pipeline, `None` for the full domain.
    pub fn simulation_truncation(&self) -> Result<Option<f64>> {
        self.simulation.rung.map(|r| self.rung_radius(r)).transpose()
    }

    /// Truncation radius of the solve pipeline.
    pub fn solver_truncation(&self) -> Result<f64> {
        self.rung_radius(self.solver.rung.unwrap_or(self.domain.ladder.len()))
    }

    /// Master seeds of the experiment replicates.
    pub fn replicate_seeds(&self) -> Vec<u64> {
        (0..self.experiment.seeds as u64)
            .map(|k| crate::rng::replicate_seed(self.seed, k))
            .collect()
    }

    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut push = |cond: bool, msg: String| {
            if !cond {
                v.push(msg);
            }
        };
        let gamma = self.simulation.gamma;
        push(
            (0.0..1.0).contains(&gamma),
            format!("γ must lie in [0,1) (got {gamma})"),
        );
        push(
            self.seed <= i64::MAX as u64,
            format!("seed must not exceed 2^63 - 1 (got {})", self.seed),
        );
        let support = self.kernel.support;
        if let Some(&m1) = self.domain.ladder.first() {
            push(
                m1 > support,
                format!("M_1 = {m1} must exceed the kernel support R = {support}"),
            );
        }
        let total: f64 = self.density.fractions.iter().sum();
        push(
            (total - 1.0).abs() <= 1e-9,
            format!("compartment fractions must sum to 1 (got {total})"),
        );
        push(
            self.solver.spacing > 0.0 && self.solver.spacing <= support / 4.0,
            format!(
                "grid spacing h = {} must lie in (0, R/4] = (0, {}]",
                self.solver.spacing,
                support / 4.0
            ),
        );
        push(
            self.domain.cone_radius <= self.kernel.lower_radius,
            format!(
                "cone radius {} must not exceed the kernel lower-bound radius {}",
                self.domain.cone_radius, self.kernel.lower_radius
            ),
        );
        push(
            self.simulation.population >= 1,
            "simulation population must be at least 1".into(),
        );
        let horizon = self.simulation.horizon;
        let dt = self.solver.dt;
        push(
            horizon > 0.0 && horizon.is_finite(),
            format!("horizon must be positive and finite (got {horizon})"),
        );
        let steps = (horizon / dt).round();
        push(
            dt > 0.0 && (steps * dt - horizon).abs() <= 1e-9 * horizon,
            format!("horizon {horizon} must be a multiple of dt = {dt}"),
        );
        let min_eta = self
            .infectivity
            .initial
            .duration
            .min_duration()
            .min(self.infectivity.new.duration.min_duration());
        push(
            dt <= min_eta / 4.0,
            format!("dt = {dt} must not exceed a quarter of the shortest duration ({min_eta})"),
        );
        push(
            self.solver.csv_every >= 1,
            "solver csv_every must be at least 1".into(),
        );
        if let Some(r) = self.simulation.rung {
            push(
                (1..=self.domain.ladder.len()).contains(&r),
                format!("simulation rung {r} outside the ladder"),
            );
        }
        if let Some(r) = self.solver.rung {
            push(
                (1..=self.domain.ladder.len()).contains(&r),
                format!("solver rung {r} outside the ladder"),
            );
        }
        let e = &self.experiment;
        push(
            !e.populations.is_empty() && e.populations.windows(2).all(|w| w[1] > w[0]),
            "experiment populations must be non-empty and strictly increasing".into(),
        );
        push(e.seeds >= 1, "experiment needs at least one seed".into());
        push(
            e.time_points >= crate::lab::MIN_TIME_POINTS && (e.time_points as f64) <= steps + 1.0,
            format!(
                "time_points = {} must lie in [{}, number of solver time levels]",
                e.time_points,
                crate::lab::MIN_TIME_POINTS
            ),
        );
        push(
            e.coupling_population >= 1,
            "coupling population must be at least 1".into(),
        );

        let domain = self.build_domain();
        if let Err(err) = &domain {
            v.push(err.to_string());
        }
        if let Err(err) = self.build_kernel() {
            v.push(err.to_string());
        }
        if let Ok(d) = &domain {
            if let Err(err) = self.build_density(d) {
                v.push(err.to_string());
            }
            if let Err(err) = TestFunctionSuite::new(d.dim, &e.suite) {
                v.push(err.to_string());
            }
        }
        if let Err(err) = self.build_infectivity() {
            v.push(err.to_string());
        }
        v.dedup();
        v
    }
}
