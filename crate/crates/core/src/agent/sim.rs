use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::hash::SpatialHash;
use super::measure::{EmpiricalTrajectory, Snapshot};
use super::population::{InitialState, Population};
use crate::error::{Error, Result};
use crate::infectivity::{InfectivityModel, SampledCurve};
use crate::rng::{self, tag};
use crate::spatial::{dist2, norm, KernelSpec};

/// Default event budget per individual.
pub const BUDGET_PER_INDIVIDUAL: usize = 50;

const MAX_LAYERS: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transition {
    Infection,
    Recovery,
}

impl Transition {
    pub fn label(self) -> &'static str {
        match self {
            Transition::Infection => "S>I",
            Transition::Recovery => "I>R",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub individual: usize,
    pub transition: Transition,
}

/// Outcome of one run.
///
/// `infection_time[i]` is 0 for the initially infected, the infection time
/// for susceptibles infected before the horizon and `+∞` otherwise.
/// `recovery_time[i]` is `infection_time[i] + η` for anyone ever infected
/// (possibly beyond the horizon) and `+∞` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub dim: usize,
    pub horizon: f64,
    pub truncation: Option<f64>,
    pub fingerprint: u64,
    pub positions: Arc<[f64]>,
    pub initial: Arc<[InitialState]>,
    pub curves: Arc<[SampledCurve]>,
    pub infection_time: Vec<f64>,
    pub recovery_time: Vec<f64>,
    pub events: Vec<Event>,
    /// Thinning candidates examined, accepted or not.
    pub candidates: usize,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// `A_i(t)`; always 0 for individuals that were not initially susceptible.
    pub fn infected_by(&self, i: usize, t: f64) -> bool {
        self.initial[i] == InitialState::Susceptible && self.infection_time[i] <= t
    }

    /// One row per event: `time,individual,transition,x0,...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "time,individual,transition")?;
        for k in 0..self.dim {
            write!(w, ",x{k}")?;
        }
        writeln!(w)?;
        for e in &self.events {
            write!(w, "{},{},{}", e.time, e.individual, e.transition.label())?;
            for c in self.position(e.individual) {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub horizon: f64,
    /// `Some(M_n)` runs the model restricted to `D_n`.
    pub truncation: Option<f64>,
    /// Cap on events plus thinning candidates; defaults to 50·N.
    pub event_budget: Option<usize>,
}

impl SimOptions {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            truncation: None,
            event_budget: None,
        }
    }

    pub fn truncated(self, radius: Option<f64>) -> Self {
        Self {
            truncation: radius,
            ..self
        }
    }

    pub fn budget(&self, n: usize) -> usize {
        self.event_budget
            .unwrap_or(BUDGET_PER_INDIVIDUAL.saturating_mul(n))
    }
}

/// Empirical interaction weights `w_j = ν_j^{−γ}/N` with
/// `ν_j = (1/N) Σ_ℓ K(X^ℓ, X^j)`, both sums restricted to `D_n` when
/// truncated.
#[derive(Debug, Clone)]
pub struct Interaction {
    pub kernel: KernelSpec,
    pub truncation: Option<f64>,
    /// `ν_j` for potential contributors, 0 for everyone else.
    pub normalizer: Vec<f64>,
    /// `w_j` for potential contributors, 0 for everyone else.
    pub weight: Vec<f64>,
}

impl Interaction {
    pub fn new(pop: &Population, kernel: &KernelSpec, truncation: Option<f64>) -> Self {
        let n = pop.len();
        let inside = |i: usize| truncation.is_none_or(|m| norm(pop.position(i)) <= m);
        let mut hash = SpatialHash::new(pop.dim, kernel.support);
        for i in (0..n).filter(|&i| inside(i)) {
            hash.insert(i as u32, pop.position(i));
        }
        let (normalizer, weight) = (0..n)
            .into_par_iter()
            .map(|j| {
                if pop.states[j] == InitialState::Recovered || !inside(j) {
                    return (0.0, 0.0);
                }
                let x = pop.position(j);
                let mut sum = 0.0;
                hash.for_each_candidate(x, |l| {
                    sum += kernel.profile_sq(dist2(pop.position(l as usize), x));
                });
                let nu = sum / n as f64;
                let w = if pop.gamma == 0.0 {
                    1.0 / n as f64
                } else {
                    nu.powf(-pop.gamma) / n as f64
                };
                (nu, w)
            })
            .unzip();
        Self {
            kernel: *kernel,
            truncation,
            normalizer,
            weight,
        }
    }

    pub fn inside(&self, x: &[f64]) -> bool {
        self.truncation.is_none_or(|m| norm(x) <= m)
    }
}

/// `Γ̄^N(t, x)`, by direct summation over every individual infected by `t`.
pub fn force_of_infection(
    pop: &Population,
    kernel: &KernelSpec,
    log: &EventLog,
    t: f64,
    x: &[f64],
    truncation: Option<f64>,
) -> Result<f64> {
    if log.fingerprint != pop.fingerprint || log.len() != pop.len() {
        return Err(Error::Usage("event log belongs to another population".into()));
    }
    if x.len() != pop.dim {
        return Err(Error::Dimension {
            expected: pop.dim,
            got: x.len(),
        });
    }
    let inter = Interaction::new(pop, kernel, truncation);
    Ok((0..pop.len())
        .filter(|&j| inter.weight[j] > 0.0 && log.infection_time[j] <= t)
        .map(|j| {
            kernel.profile_sq(dist2(x, pop.position(j)))
                * pop.curves[j].eval(t - log.infection_time[j])
                * inter.weight[j]
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Unit-rate Poisson random measure on `[0, T] × [0, ∞)` attached to one
/// susceptible, revealed in horizontal layers of height `H` on demand.
///
/// Layer `k` of individual `i` is drawn from its own stream, so the measure
/// does not depend on the order in which layers are revealed. Full and
/// truncated runs therefore see the same points.
struct Prm {
    seed: u64,
    height: f64,
    horizon: f64,
    layers: Vec<Vec<Vec<(f64, f64)>>>,
}

impl Prm {
    fn layer(&mut self, i: usize, k: usize) -> &[(f64, f64)] {
        let layers = &mut self.layers[i];
        while layers.len() <= k {
            let index = layers.len() as u64;
            assert!(index < MAX_LAYERS, "thinning layer index overflow");
            let mut r = rng::stream(self.seed, tag::THINNING, ((i as u64) << 24) | index);
            let base = index as f64 * self.height;
            let mut pts = Vec::new();
            let mut t = 0.0;
            loop {
                let e: f64 = Exp1.sample(&mut r);
                t += e / self.height;
                if t > self.horizon {
                    break;
                }
                let u: f64 = r.random();
                pts.push((t, base + self.height * u));
            }
            layers.push(pts);
        }
        &layers[k]
    }

    /// First point with time `> now` and mark in `[lo, hi)`.
    fn first_in_band(&mut self, i: usize, now: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        if !(hi > lo) {
            return None;
        }
        let h = self.height;
        let k_lo = (lo / h).floor() as usize;
        let k_hi = ((hi / h).ceil() as usize).max(k_lo + 1);
        let mut best: Option<(f64, f64)> = None;
        for k in k_lo..k_hi {
            let pts = self.layer(i, k);
            let start = pts.partition_point(|p| p.0 <= now);
            if let Some(&p) = pts[start..].iter().find(|p| p.1 >= lo && p.1 < hi) {
                if best.is_none_or(|b| p.0 < b.0) {
                    best = Some(p);
                }
            }
        }
        best
    }
}

/// Exact simulation on `[0, T]` by thinning a per-susceptible Poisson random
/// measure.
///
/// A point `(s, u)` of susceptible `i`'s measure infects `i` iff
/// `u ≤ Γ̄(s, X^i)`. Candidates are the points below the dominator
/// `g_i = λ*·Σ K(X^i, X^j) w_j` over contributors infected so far, which
/// only grows, at infections.
pub fn simulate(
    pop: &Population,
    infectivity: &InfectivityModel,
    kernel: &KernelSpec,
    opts: &SimOptions,
) -> Result<(EventLog, EmpiricalTrajectory)> {
    let n = pop.len();
    let horizon = opts.horizon;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Parameter(format!(
            "time horizon must be positive and finite (got {horizon})"
        )));
    }
    let cap = infectivity.cap;
    if let Some(j) = (0..n).find(|&j| pop.curves[j].max_level() > cap) {
        return Err(Error::Usage(format!(
            "curve of individual {j} exceeds the infectivity cap {cap}"
        )));
    }
    let budget = opts.budget(n);
    let inter = Interaction::new(pop, kernel, opts.truncation);
    let height = cap * kernel.amplitude;

    let mut infection_time = vec![f64::INFINITY; n];
    let mut recovery_time = vec![f64::INFINITY; n];
    let mut counts = pop.counts();
    let mut snapshots = vec![Snapshot {
        time: 0.0,
        counts,
    }];
    let mut events = Vec::new();
    let mut recoveries = BinaryHeap::new();

    let mut contributors = SpatialHash::new(pop.dim, kernel.support);
    let mut targets = SpatialHash::new(pop.dim, kernel.support);
    let mut susceptible = vec![false; n];
    for i in 0..n {
        match pop.states[i] {
            InitialState::Infected => {
                infection_time[i] = 0.0;
                recovery_time[i] = pop.curves[i].eta;
                recoveries.push(Reverse((Time(recovery_time[i]), i)));
                if inter.weight[i] > 0.0 {
                    contributors.insert(i as u32, pop.position(i));
                }
            }
            InitialState::Susceptible => {
                susceptible[i] = true;
                if inter.inside(pop.position(i)) {
                    targets.insert(i as u32, pop.position(i));
                }
            }
            InitialState::Recovered => {}
        }
    }

    let mut prm = Prm {
        seed: pop.seed,
        height,
        horizon,
        layers: vec![Vec::new(); n],
    };
    let mut dominator = vec![0.0; n];
    let mut current: Vec<Option<(f64, f64)>> = vec![None; n];
    let mut version = vec![0u32; n];
    let mut candidates = BinaryHeap::new();

    if height > 0.0 {
        for j in (0..n).filter(|&j| pop.states[j] == InitialState::Infected) {
            let w = inter.weight[j];
            if w == 0.0 {
                continue;
            }
            let xj = pop.position(j);
            targets.for_each_candidate(xj, |l| {
                let l = l as usize;
                dominator[l] += kernel.profile_sq(dist2(pop.position(l), xj)) * cap * w;
            });
        }
        for i in (0..n).filter(|&i| dominator[i] > 0.0) {
            if let Some(p) = prm.first_in_band(i, 0.0, 0.0, dominator[i]) {
                current[i] = Some(p);
                candidates.push(Reverse((Time(p.0), i, version[i])));
            }
        }
    }

    let mut work = 0usize;
    loop {
        while let Some(&Reverse((_, i, v))) = candidates.peek() {
            if v == version[i] && susceptible[i] {
                break;
            }
            candidates.pop();
        }
        let next_cand = candidates.peek().map(|Reverse((t, _, _))| t.0);
        let next_rec = recoveries.peek().map(|Reverse((t, _))| t.0);
        let (time, is_recovery) = match (next_cand, next_rec) {
            (None, None) => break,
            (Some(c), None) => (c, false),
            (None, Some(r)) => (r, true),
            (Some(c), Some(r)) => {
                if r <= c {
                    (r, true)
                } else {
                    (c, false)
                }
            }
        };
        if time > horizon {
            break;
        }
        work += 1;
        if work > budget {
            return Err(Error::EventBudget { budget, time });
        }

        if is_recovery {
            let Reverse((_, j)) = recoveries.pop().expect("peeked");
            counts[1] -= 1;
            counts[2] += 1;
            events.push(Event {
                time,
                individual: j,
                transition: Transition::Recovery,
            });
            snapshots.push(Snapshot { time, counts });
            continue;
        }

        let Reverse((_, i, _)) = candidates.pop().expect("peeked");
        let (s, u) = current[i].take().expect("live candidate");
        let x = pop.position(i);
        let mut rate = 0.0;
        contributors.for_each_candidate(x, |j| {
            let j = j as usize;
            rate += kernel.profile_sq(dist2(x, pop.position(j)))
                * pop.curves[j].eval(s - infection_time[j])
                * inter.weight[j];
        });
        debug_assert!(rate <= dominator[i] * (1.0 + 1e-9) + 1e-300);

        if u > rate {
            version[i] += 1;
            current[i] = prm.first_in_band(i, s, 0.0, dominator[i]);
            if let Some(p) = current[i] {
                candidates.push(Reverse((Time(p.0), i, version[i])));
            }
            continue;
        }

        susceptible[i] = false;
        version[i] += 1;
        infection_time[i] = s;
        recovery_time[i] = s + pop.curves[i].eta;
        recoveries.push(Reverse((Time(recovery_time[i]), i)));
        counts[0] -= 1;
        counts[1] += 1;
        events.push(Event {
            time: s,
            individual: i,
            transition: Transition::Infection,
        });
        snapshots.push(Snapshot { time: s, counts });

        let w = inter.weight[i];
        if w == 0.0 {
            continue;
        }
        contributors.insert(i as u32, x);
        targets.for_each_candidate(x, |l| {
            let l = l as usize;
            if !susceptible[l] {
                return;
            }
            let k = kernel.profile_sq(dist2(pop.position(l), x));
            if k == 0.0 {
                return;
            }
            let lo = dominator[l];
            let hi = lo + k * cap * w;
            dominator[l] = hi;
            if let Some(p) = prm.first_in_band(l, s, lo, hi) {
                if current[l].is_none_or(|c| p.0 < c.0) {
                    current[l] = Some(p);
                    version[l] += 1;
                    candidates.push(Reverse((Time(p.0), l, version[l])));
                }
            }
        });
    }

    let log = EventLog {
        dim: pop.dim,
        horizon,
        truncation: opts.truncation,
        fingerprint: pop.fingerprint,
        positions: pop.positions.clone(),
        initial: pop.states.clone(),
        curves: pop.curves.clone(),
        infection_time,
        recovery_time,
        events,
        candidates: work,
    };
    let traj = EmpiricalTrajectory::new(log.clone(), snapshots);
    Ok((log, traj))
}
