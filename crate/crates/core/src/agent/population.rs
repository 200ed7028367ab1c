use std::sync::Arc;

use crate::error::{Error, Result};
use crate::infectivity::{Cohort, InfectivityModel, SampledCurve};
use crate::rng::{self, tag};
use crate::spatial::{BaselineDensity, DomainSpec};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialState {
    Susceptible,
    Infected,
    Recovered,
}

/// Positions, initial states and pre-assigned infectivity curves of the N
/// individuals.
///
/// Everything is a deterministic function of `seed`: individual `i` draws its
/// state and position from stream `(seed, INIT, i)` and its curve from
/// `(seed, CURVE_INITIAL, i)` or `(seed, CURVE_NEW, i)`. Thinning randomness
/// lives in `(seed, THINNING, ·)` and is opened by the simulator.
#[derive(Debug, Clone)]
pub struct Population {
    pub dim: usize,
    pub gamma: f64,
    pub seed: u64,
    pub positions: Arc<[f64]>,
    pub states: Arc<[InitialState]>,
    /// `λ_{−j}` for initially infected, the reserved `λ_j` for initially
    /// susceptible, zero for initially recovered.
    pub curves: Arc<[SampledCurve]>,
    /// Digest of positions and states, used to detect logs from different
    /// populations.
    pub fingerprint: u64,
}

impl Population {
    /// Assembles a population from explicit parts; `positions` is row-major
    /// with `dim` coordinates per individual.
    pub fn from_parts(
        dim: usize,
        gamma: f64,
        seed: u64,
        positions: Vec<f64>,
        states: Vec<InitialState>,
        curves: Vec<SampledCurve>,
    ) -> Result<Self> {
        crate::spatial::check_gamma(gamma)?;
        if positions.len() != dim * states.len() || curves.len() != states.len() {
            return Err(Error::Usage(
                "positions, states and curves must describe the same individuals".into(),
            ));
        }
        let mut state = seed ^ states.len() as u64;
        let mut fingerprint = 0u64;
        for v in &positions {
            state ^= v.to_bits();
            fingerprint ^= rng::splitmix64(&mut state);
        }
        for s in &states {
            state ^= *s as u64;
            fingerprint = fingerprint.rotate_left(7) ^ rng::splitmix64(&mut state);
        }
        Ok(Self {
            dim,
            gamma,
            seed,
            positions: positions.into(),
            states: states.into(),
            curves: curves.into(),
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn indices_of(&self, state: InitialState) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.states[i] == state).collect()
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in self.states.iter() {
            c[*s as usize] += 1;
        }
        c
    }
}

pub fn init_population(
    domain: &DomainSpec,
    density: &BaselineDensity,
    infectivity: &InfectivityModel,
    n: usize,
    gamma: f64,
    seed: u64,
) -> Result<Population> {
    if n == 0 {
        return Err(Error::Config("population size must be at least 1".into()));
    }
    crate::spatial::check_gamma(gamma)?;
    let [s0, i0, _] = density.fractions;
    let mut positions = Vec::with_capacity(n * domain.dim);
    let mut states = Vec::with_capacity(n);
    let mut curves = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let mut r = rng::stream(seed, tag::INIT, i);
        let u: f64 = r.random();
        let state = if u < s0 {
            InitialState::Susceptible
        } else if u < s0 + i0 {
            InitialState::Infected
        } else {
            InitialState::Recovered
        };
        positions.extend(density.sample_position(state as usize, domain, &mut r));
        states.push(state);
        curves.push(match state {
            InitialState::Susceptible => {
                infectivity.sample_curve(&mut rng::stream(seed, tag::CURVE_NEW, i), Cohort::New)
            }
            InitialState::Infected => infectivity.sample_curve(
                &mut rng::stream(seed, tag::CURVE_INITIAL, i),
                Cohort::Initial,
            ),
            InitialState::Recovered => SampledCurve::zero(),
        });
    }
    Population::from_parts(domain.dim, gamma, seed, positions, states, curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infectivity::{CohortLaw, CurveFamily, DurationLaw};
    use crate::spatial::{DensityFamily, Shape};

    pub(crate) fn setup(fractions: [f64; 3]) -> (DomainSpec, BaselineDensity, InfectivityModel) {
        let dom = DomainSpec::new(2, Shape::FullSpace, 0.5, 0.5, vec![2.0, 4.0]).unwrap();
        let dens = BaselineDensity::new(
            &dom,
            1.0,
            fractions,
            [
                DensityFamily::ExpPower { rate: 1.0 },
                DensityFamily::ExpPower { rate: 3.0 },
                DensityFamily::ExpPower { rate: 1.0 },
            ],
        )
        .unwrap();
        let law = CohortLaw {
            curve: CurveFamily::Constant { level: 1.0 },
            duration: DurationLaw::Exponential { rate: 1.0 },
        };
        let inf = InfectivityModel::new(1.0, law.clone(), law).unwrap();
        (dom, dens, inf)
    }

    #[test]
    fn all_susceptible() {
        let (dom, dens, inf) = setup([1.0, 0.0, 0.0]);
        let p = init_population(&dom, &dens, &inf, 500, 0.0, 1).unwrap();
        assert!(p.indices_of(InitialState::Infected).is_empty());
        assert_eq!(p.counts(), [500, 0, 0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let (dom, dens, inf) = setup([0.8, 0.1, 0.1]);
        let a = init_population(&dom, &dens, &inf, 300, 0.5, 9).unwrap();
        let b = init_population(&dom, &dens, &inf, 300, 0.5, 9).unwrap();
        let c = init_population(&dom, &dens, &inf, 300, 0.5, 10).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.states, b.states);
        assert_eq!(a.curves, b.curves);
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn partition_and_binomial_fraction() {
        let (dom, dens, inf) = setup([0.9, 0.05, 0.05]);
        let n = 10_000;
        let p = init_population(&dom, &dens, &inf, n, 0.0, 3).unwrap();
        let s = p.indices_of(InitialState::Susceptible);
        let i = p.indices_of(InitialState::Infected);
        let r = p.indices_of(InitialState::Recovered);
        assert_eq!(s.len() + i.len() + r.len(), n);
        let mut all: Vec<usize> = s.iter().chain(&i).chain(&r).copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
        let frac = s.len() as f64 / n as f64;
        assert!((frac - 0.9).abs() <= 4.0 * (0.09 / n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_gamma() {
        let (dom, dens, inf) = setup([0.9, 0.1, 0.0]);
        assert!(init_population(&dom, &dens, &inf, 10, 1.0, 3).is_err());
        assert!(init_population(&dom, &dens, &inf, 0, 0.5, 3).is_err());
    }
}
