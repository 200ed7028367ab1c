use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{load_weights, save_weights, weight_key};
use super::grid::{Grid, WeightMatrix};
use crate::error::{Error, Result};
use crate::infectivity::{Cohort, InfectivityModel};
use crate::spatial::{check_gamma, BaselineDensity, KernelSpec, Lattice};

const FIXED_POINT_TOL: f64 = 1e-15;
const FIXED_POINT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Left-endpoint rule for every time integral.
    Euler,
    /// Trapezoid rule; each step solves for the new flux by fixed-point
    /// iteration.
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub spacing: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy)]
pub struct LimitProblem<'a> {
    pub density: &'a BaselineDensity,
    pub kernel: &'a KernelSpec,
    pub infectivity: &'a InfectivityModel,
    pub gamma: f64,
    /// Radius `M_n` of the truncated domain.
    pub truncation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    S,
    F,
    I,
    R,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::S, Field::F, Field::I, Field::R];
}

/// `λ̄, λ̄⁰, F, F₀` and complements on the time lattice `kΔt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTables {
    pub lam: Vec<f64>,
    pub lam0: Vec<f64>,
    pub cdf: Vec<f64>,
    pub cdf0: Vec<f64>,
    pub surv: Vec<f64>,
    pub surv0: Vec<f64>,
}

impl TimeTables {
    pub fn new(inf: &InfectivityModel, dt: f64, steps: usize) -> Self {
        let t = |k: usize| k as f64 * dt;
        let lam = (0..=steps).map(|k| inf.mean_curve(Cohort::New, t(k))).collect();
        let lam0 = (0..=steps).map(|k| inf.mean_curve(Cohort::Initial, t(k))).collect();
        let cdf: Vec<f64> = (0..=steps).map(|k| inf.duration_cdf(Cohort::New, t(k))).collect();
        let cdf0: Vec<f64> = (0..=steps)
            .map(|k| inf.duration_cdf(Cohort::Initial, t(k)))
            .collect();
        let surv = cdf.iter().map(|f| 1.0 - f).collect();
        let surv0 = cdf0.iter().map(|f| 1.0 - f).collect();
        Self {
            lam,
            lam0,
            cdf,
            cdf0,
            surv,
            surv0,
        }
    }
}

/// Solution on `D_n` at every step of the time lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitFields {
    pub grid: Grid,
    pub weights: WeightMatrix,
    pub tables: TimeTables,
    pub dt: f64,
    pub scheme: Scheme,
    pub truncation: f64,
    /// `[step][node]`.
    pub s: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub i: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// Flux `B(t_k, x) = S(t_k, x)·∫ Λ_n(x, y) 𝔉(t_k, y) dy`.
    pub flux: Vec<Vec<f64>>,
}

impl LimitFields {
    pub fn steps(&self) -> usize {
        self.s.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn field(&self, which: Field, k: usize) -> &[f64] {
        match which {
            Field::S => &self.s[k],
            Field::F => &self.f[k],
            Field::I => &self.i[k],
            Field::R => &self.r[k],
        }
    }

    /// Step index of time `t`, which must lie on the time lattice.
    pub fn step_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > 1e-9 * self.dt.max(t) || k < 0.0 || k as usize > self.steps() {
            return Err(Error::Parameter(format!(
                "time {t} is not on the solver lattice (dt = {})",
                self.dt
            )));
        }
        Ok(k as usize)
    }

    /// `Γ̄_n(t_k, x) = ∫ Λ_n(x, y) 𝔉(t_k, y) dy` at every node.
    pub fn force(&self, k: usize) -> Vec<f64> {
        self.weights.apply(&self.f[k])
    }

    /// `∫ φ·field(t_k)·μ̄` with `φ` given at the nodes.
    pub fn pairing(&self, which: Field, k: usize, phi: &[f64]) -> f64 {
        self.grid.pairing(phi, self.field(which, k))
    }

    /// Rows `t,x0,...,S,F,I,R` for every `every`-th step.
    pub fn write_csv<W: Write>(&self, mut w: W, every: usize) -> Result<()> {
        let d = self.grid.dim();
        write!(w, "t")?;
        for k in 0..d {
            write!(w, ",x{k}")?;
        }
        writeln!(w, ",S,F,I,R")?;
        for k in (0..=self.steps()).step_by(every.max(1)) {
            let t = self.time(k);
            for n in 0..self.grid.len() {
                write!(w, "{t}")?;
                for c in self.grid.node(n) {
                    write!(w, ",{c}")?;
                }
                writeln!(
                    w,
                    ",{},{},{},{}",
                    self.s[k][n], self.f[k][n], self.i[k][n], self.r[k][n]
                )?;
            }
        }
        Ok(())
    }
}

fn validate(problem: &LimitProblem<'_>, spec: &GridSpec) -> Result<usize> {
    check_gamma(problem.gamma)?;
    let support = problem.kernel.support;
    if !(spec.spacing > 0.0) || spec.spacing > support / 4.0 {
        return Err(Error::Parameter(format!(
            "grid spacing h = {} must lie in (0, R/4] with R = {support}",
            spec.spacing
        )));
    }
    let min_eta = problem
        .infectivity
        .initial
        .duration
        .min_duration()
        .min(problem.infectivity.new.duration.min_duration());
    if !(spec.dt > 0.0) || spec.dt > min_eta / 4.0 {
        return Err(Error::Parameter(format!(
            "time step dt = {} must lie in (0, {}] (a quarter of the shortest duration)",
            spec.dt,
            min_eta / 4.0
        )));
    }
    if !(spec.horizon > 0.0) || !spec.horizon.is_finite() {
        return Err(Error::Parameter("time horizon must be positive".into()));
    }
    let steps = (spec.horizon / spec.dt).round();
    if (steps * spec.dt - spec.horizon).abs() > 1e-9 * spec.horizon {
        return Err(Error::Parameter(format!(
            "horizon {} is not a multiple of dt = {}",
            spec.horizon, spec.dt
        )));
    }
    if !(problem.truncation > 0.0) {
        return Err(Error::Parameter("truncation radius must be positive".into()));
    }
    Ok(steps as usize)
}

pub fn solve(problem: &LimitProblem<'_>, spec: &GridSpec) -> Result<LimitFields> {
    solve_cached(problem, spec, None)
}

/// As [`solve`], reading and writing the weight matrix in `cache_dir` under
/// its config hash.
pub fn solve_cached(
    problem: &LimitProblem<'_>,
    spec: &GridSpec,
    cache_dir: Option<&Path>,
) -> Result<LimitFields> {
    let steps = validate(problem, spec)?;
    let dim = problem.density.dim;
    let lattice = Lattice::new(dim, problem.density.shape, spec.spacing);
    let grid = Grid::new(problem.density, lattice, problem.truncation)?;
    let weights = match cache_dir {
        None => WeightMatrix::build(&grid, problem.kernel, problem.density, problem.gamma)?,
        Some(dir) => {
            let key = weight_key(&grid, problem.kernel, problem.density, problem.gamma);
            let path = dir.join(format!("weights-{key}.bin"));
            match load_weights(&path, &key)? {
                Some(w) if w.rows() == grid.len() => w,
                _ => {
                    let w = WeightMatrix::build(&grid, problem.kernel, problem.density, problem.gamma)?;
                    save_weights(&path, &key, &w)?;
                    w
                }
            }
        }
    };
    let tables = TimeTables::new(problem.infectivity, spec.dt, steps);
    march(grid, weights, tables, spec.dt, steps, spec.scheme, problem.truncation)
}

/// Per-node history of the flux, for the Volterra sums.
struct History {
    b: Vec<Vec<f64>>,
}

impl History {
    /// `Σ_{m<k} c_m g[k−m] B_m(x)` for the three kernels `λ̄, F^c, F`, with
    /// `c_0 = first` and `c_m = 1` otherwise.
    fn sums(&self, x: usize, k: usize, tables: &TimeTables, first: f64) -> (f64, f64, f64) {
        let b = &self.b[x];
        let (mut sl, mut si, mut sr) = (0.0, 0.0, 0.0);
        for (m, &bm) in b[..k].iter().enumerate() {
            let c = if m == 0 { first * bm } else { bm };
            let lag = k - m;
            sl += tables.lam[lag] * c;
            si += tables.surv[lag] * c;
            sr += tables.cdf[lag] * c;
        }
        (sl, si, sr)
    }
}

fn march(
    grid: Grid,
    weights: WeightMatrix,
    tables: TimeTables,
    dt: f64,
    steps: usize,
    scheme: Scheme,
    truncation: f64,
) -> Result<LimitFields> {
    let n = grid.len();
    let s0: Vec<f64> = grid.shares.iter().map(|s| s[0]).collect();
    let i0: Vec<f64> = grid.shares.iter().map(|s| s[1]).collect();
    let r0: Vec<f64> = grid.shares.iter().map(|s| s[2]).collect();

    let mut s = vec![s0.clone()];
    let mut f = vec![i0.iter().map(|v| tables.lam0[0] * v).collect::<Vec<_>>()];
    let mut i = vec![i0.iter().map(|v| tables.surv0[0] * v).collect::<Vec<_>>()];
    let mut r = vec![(0..n)
        .map(|x| r0[x] + tables.cdf0[0] * i0[x])
        .collect::<Vec<_>>()];
    let mut flux: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut hist = History {
        b: vec![Vec::with_capacity(steps + 1); n],
    };
    let half = 0.5 * dt;

    let b0 = rate_times(&weights, &f[0], &s[0]);
    push_flux(&mut hist, &mut flux, b0);

    for k in 1..=steps {
        let first = match scheme {
            Scheme::Euler => 1.0,
            Scheme::Trapezoid => 0.5,
        };
        // known parts: contributions of B_0 .. B_{k−1}
        let known: Vec<(f64, f64, f64, f64)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let (sl, si, sr) = hist.sums(x, k, &tables, first);
                let b_prev = hist.b[x][k - 1];
                // S_{k−1} already carries the weight of B_{k−1} that the
                // trapezoid rule leaves to step k
                let s_known = match scheme {
                    Scheme::Euler => s[k - 1][x] - dt * b_prev,
                    Scheme::Trapezoid => s[k - 1][x] - half * b_prev,
                };
                (
                    s_known,
                    tables.lam0[k] * i0[x] + dt * sl,
                    i0[x] * tables.surv0[k] + dt * si,
                    r0[x] + i0[x] * tables.cdf0[k] + dt * sr,
                )
            })
            .collect();

        let (sk, fk, ik, rk, bk) = match scheme {
            Scheme::Euler => {
                let sk: Vec<f64> = known.iter().map(|k| k.0).collect();
                if let Some(x) = (0..n).find(|&x| sk[x] < 0.0 || sk[x].is_nan()) {
                    let rate = weights.row_dot(x, &f[k - 1]);
                    return Err(Error::Stability {
                        step: k,
                        value: sk[x],
                        suggested_dt: 0.5 / rate,
                    });
                }
                let fk: Vec<f64> = known.iter().map(|k| k.1).collect();
                let ik: Vec<f64> = known.iter().map(|k| k.2).collect();
                let rk: Vec<f64> = known.iter().map(|k| k.3).collect();
                let bk = rate_times(&weights, &fk, &sk);
                (sk, fk, ik, rk, bk)
            }
            Scheme::Trapezoid => trapezoid_step(&weights, &tables, &known, &hist, k, half)?,
        };
        s.push(sk);
        f.push(fk);
        i.push(ik);
        r.push(rk);
        push_flux(&mut hist, &mut flux, bk);
    }

    Ok(LimitFields {
        grid,
        weights,
        tables,
        dt,
        scheme,
        truncation,
        s,
        f,
        i,
        r,
        flux,
    })
}

fn push_flux(hist: &mut History, flux: &mut Vec<Vec<f64>>, b: Vec<f64>) {
    for (x, v) in b.iter().enumerate() {
        hist.b[x].push(*v);
    }
    flux.push(b);
}

fn rate_times(w: &WeightMatrix, f: &[f64], s: &[f64]) -> Vec<f64> {
    (0..s.len())
        .into_par_iter()
        .map(|x| s[x] * w.row_dot(x, f))
        .collect()
}

type StepOut = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

/// Solves `B = S·(W𝔉)` with `S = S_known − (Δt/2)B`,
/// `𝔉 = 𝔉_known + (Δt/2)λ̄(0)B`.
fn trapezoid_step(
    w: &WeightMatrix,
    tables: &TimeTables,
    known: &[(f64, f64, f64, f64)],
    hist: &History,
    k: usize,
    half: f64,
) -> Result<StepOut> {
    let n = known.len();
    let mut b: Vec<f64> = (0..n).map(|x| hist.b[x][k - 1]).collect();
    let mut f = vec![0.0; n];
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITER {
        for x in 0..n {
            f[x] = known[x].1 + half * tables.lam[0] * b[x];
        }
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|x| {
                let rate = w.row_dot(x, &f);
                known[x].0 / (1.0 + half * rate) * rate
            })
            .collect();
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let delta = next
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        b = next;
        if delta <= FIXED_POINT_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SolverDefect(format!(
            "trapezoid fixed point did not converge at step {k}"
        )));
    }
    for x in 0..n {
        f[x] = known[x].1 + half * tables.lam[0] * b[x];
    }
    let s: Vec<f64> = (0..n).map(|x| known[x].0 - half * b[x]).collect();
    if let Some(x) = (0..n).find(|&x| s[x] < 0.0 || s[x].is_nan()) {
        return Err(Error::Stability {
            step: k,
            value: s[x],
            suggested_dt: 1.0 / w.row_dot(x, &f),
        });
    }
    let i = (0..n)
        .map(|x| known[x].2 + half * tables.surv[0] * b[x])
        .collect();
    let r = (0..n)
        .map(|x| known[x].3 + half * tables.cdf[0] * b[x])
        .collect();
    Ok((s, f, i, r, b))
}
