use std::io::Write;

use super::population::InitialState;
use super::sim::EventLog;
use crate::error::{Error, Result};
use crate::spatial::norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    S,
    I,
    R,
    /// Infectivity-weighted measure `μ̄^{𝔉,N}`.
    F,
    Total,
}

impl Compartment {
    pub const ALL: [Compartment; 5] = [
        Compartment::S,
        Compartment::I,
        Compartment::R,
        Compartment::F,
        Compartment::Total,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::I => "I",
            Compartment::R => "R",
            Compartment::F => "F",
            Compartment::Total => "total",
        }
    }
}

/// Compartment counts `(#S, #I, #R)` right after an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub counts: [usize; 3],
}

/// Piecewise-constant empirical measures of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTrajectory {
    pub log: EventLog,
    /// Initial state followed by one snapshot per event, in time order.
    pub snapshots: Vec<Snapshot>,
}

impl EmpiricalTrajectory {
    pub fn new(log: EventLog, snapshots: Vec<Snapshot>) -> Self {
        Self { log, snapshots }
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// Compartment of individual `i` at time `t`.
    pub fn state_at(&self, i: usize, t: f64) -> InitialState {
        let log = &self.log;
        match log.initial[i] {
            InitialState::Recovered => InitialState::Recovered,
            _ if t < log.infection_time[i] => InitialState::Susceptible,
            _ if t < log.recovery_time[i] => InitialState::Infected,
            _ => InitialState::Recovered,
        }
    }

    /// `λ_j(t − τ_j)`, zero for individuals not infected by `t`.
    pub fn infectivity_at(&self, j: usize, t: f64) -> f64 {
        let tau = self.log.infection_time[j];
        if tau <= t {
            self.log.curves[j].eval(t - tau)
        } else {
            0.0
        }
    }

    /// `(#S, #I, #R)` at time `t`, read from the snapshots.
    pub fn counts_at(&self, t: f64) -> [usize; 3] {
        let k = self.snapshots.partition_point(|s| s.time <= t);
        self.snapshots[k.max(1) - 1].counts
    }

    /// One row per snapshot: `time,S,I,R`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,S,I,R")?;
        for s in &self.snapshots {
            writeln!(w, "{},{},{},{}", s.time, s.counts[0], s.counts[1], s.counts[2])?;
        }
        Ok(())
    }
}

/// `(μ̄_t^{·,N}, φ)` for the given compartment.
pub fn measure_eval<F: Fn(&[f64]) -> f64>(
    traj: &EmpiricalTrajectory,
    compartment: Compartment,
    t: f64,
    phi: F,
) -> f64 {
    let values: Vec<f64> = (0..traj.len()).map(|i| phi(traj.log.position(i))).collect();
    measure_eval_values(traj, compartment, t, &values)
}

/// Same as [`measure_eval`] with `φ(X^i)` precomputed in `values`.
pub fn measure_eval_values(
    traj: &EmpiricalTrajectory,
    compartment: Compartment,
    t: f64,
    values: &[f64],
) -> f64 {
    let n = traj.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let weight = match compartment {
                Compartment::Total => 1.0,
                Compartment::F => traj.infectivity_at(i, t),
                c => {
                    let want = match c {
                        Compartment::S => InitialState::Susceptible,
                        Compartment::I => InitialState::Infected,
                        _ => InitialState::Recovered,
                    };
                    if traj.state_at(i, t) == want {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            weight * values[i]
        })
        .sum();
    sum / n as f64
}

/// `(1/N) Σ_{i ∈ 𝔖_N} sup_{t ≤ T} |A_{n,i}(t) − A_i(t)| 1{‖X^i‖ ≤ M_n}`.
pub fn coupling_discrepancy(full: &EventLog, truncated: &EventLog, radius: f64) -> Result<f64> {
    if full.fingerprint != truncated.fingerprint
        || full.len() != truncated.len()
        || full.positions != truncated.positions
    {
        return Err(Error::Usage(
            "coupling needs two runs of the same population".into(),
        ));
    }
    if full.horizon != truncated.horizon {
        return Err(Error::Usage(
            "coupling needs two runs over the same horizon".into(),
        ));
    }
    let n = full.len();
    let differing = (0..n)
        .filter(|&i| {
            full.initial[i] == InitialState::Susceptible
                && norm(full.position(i)) <= radius
                && full.infection_time[i] != truncated.infection_time[i]
        })
        .count();
    Ok(differing as f64 / n as f64)
}
