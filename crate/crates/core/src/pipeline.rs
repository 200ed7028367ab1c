//! End-to-end pipelines behind the command-line subcommands.
//!
//! Every pipeline writes `resolved_config.toml` and `seed.txt` into the
//! output directory before any result file, so a run can be repeated from
//! its own output.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

use crate::agent::{coupling_discrepancy, InitialState};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lab::{emit_report, lln_experiment, truncation_experiment, LabReport};
use crate::limit::{apriori_check, solve_cached, Field};
use crate::spatial::{
    numeric_sup_lambda, numeric_sup_omega, norm, Lattice, OperatorBounds, PartitionSpec,
    WeightModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Solve,
    Lln,
    Truncation,
    Validate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when a check of the validate pipeline failed.
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

/// One line of `validate.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    let mut files = vec![
        write(out, "resolved_config.toml", &cfg.to_toml()?)?,
        write(out, "seed.txt", &seed_text(cfg))?,
    ];
    let mut passed = true;
    match command {
        Command::Simulate => files.extend(simulate(cfg, out)?),
        Command::Solve => files.extend(solve(cfg, out)?),
        Command::Lln => {
            let inst = cfg.instance()?;
            let e = &cfg.experiment;
            let lln = lln_experiment(&inst, &e.populations, &cfg.replicate_seeds(), e.time_points)?;
            let report = LabReport {
                lln: Some(lln),
                truncation: None,
            };
            files.extend(emit_report(&report, out)?);
        }
        Command::Truncation => {
            let inst = cfg.instance()?;
            let tr = truncation_experiment(
                &inst,
                cfg.experiment.coupling_population,
                &cfg.replicate_seeds(),
            )?;
            let report = LabReport {
                lln: None,
                truncation: Some(tr),
            };
            files.extend(emit_report(&report, out)?);
        }
        Command::Validate => {
            let checks = validate(cfg)?;
            passed = checks.iter().all(|c| c.passed);
            let mut text = String::new();
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(text, "{tag} {}: {}", c.name, c.detail);
            }
            files.push(write(out, "validate.txt", &text)?);
        }
    }
    Ok(Outcome { passed, files })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

fn seed_text(cfg: &RunConfig) -> String {
    let mut s = format!("master {}\n", cfg.seed);
    for (k, r) in cfg.replicate_seeds().iter().enumerate() {
        let _ = writeln!(s, "replicate {k} {r}");
    }
    s
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let inst = cfg.instance()?;
    let pop = inst.population(cfg.simulation.population, cfg.seed)?;
    let (log, traj) = inst.simulate(&pop, cfg.simulation_truncation()?)?;
    let events = out.join("events.csv");
    log.write_csv(BufWriter::new(File::create(&events)?))?;
    let trajectory = out.join("trajectory.csv");
    traj.write_csv(BufWriter::new(File::create(&trajectory)?))?;
    let last = traj.snapshots.last().expect("initial snapshot").counts;
    let summary = format!(
        "population {}\nevents {}\ncandidates {}\nfinal S {} I {} R {}\n",
        log.len(),
        log.events.len(),
        log.candidates,
        last[0],
        last[1],
        last[2]
    );
    Ok(vec![events, trajectory, write(out, "simulation_summary.txt", &summary)?])
}

fn solve(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let inst = cfg.instance()?;
    let problem = inst.problem(cfg.solver_truncation()?);
    let cache = out.join("cache");
    fs::create_dir_all(&cache)?;
    let fields = solve_cached(&problem, &inst.grid, Some(&cache))?;
    let path = out.join("fields.csv");
    fields.write_csv(BufWriter::new(File::create(&path)?), cfg.solver.csv_every)?;
    let apriori = apriori_check(&fields, inst.infectivity.cap)?;
    let mut summary = format!(
        "nodes {}\nsteps {}\nconservation drift {:e}\nC_hat {}\nS margin {}\nF margin {}\n",
        fields.grid.len(),
        fields.steps(),
        conservation_drift(&fields),
        apriori.c_hat,
        apriori.s_margin,
        apriori.f_margin
    );
    let k = fields.steps();
    for field in Field::ALL {
        let ones = vec![1.0; fields.grid.len()];
        let _ = writeln!(summary, "mass {field:?} at T {}", fields.pairing(field, k, &ones));
    }
    Ok(vec![path, write(out, "solve_summary.txt", &summary)?])
}

fn conservation_drift(fields: &crate::limit::LimitFields) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..=fields.steps() {
        for x in 0..fields.grid.len() {
            let total = fields.s[k][x] + fields.i[k][x] + fields.r[k][x];
            let start = fields.s[0][x] + fields.i[0][x] + fields.r[0][x];
            worst = worst.max((total - start).abs());
        }
    }
    worst
}

/// Individuals used by the simulation checks of [`validate`].
pub const VALIDATE_POPULATION: usize = 2000;

/// Invariant checks of one configuration.
pub fn validate(cfg: &RunConfig) -> Result<Vec<Check>> {
    let inst = cfg.instance()?;
    let mut checks = Vec::new();
    let domain = &inst.domain;
    let lattice = Lattice::new(domain.dim, domain.shape, cfg.solver.spacing);
    let model = WeightModel::new(&inst.kernel, &inst.density, lattice, inst.gamma, None)?;

    checks.push(match inst.density.envelope() {
        Some(env) => {
            let b = OperatorBounds::compute(&inst.kernel, env, domain, inst.gamma)?;
            let lam = numeric_sup_lambda(&model, domain.top())?;
            let om = numeric_sup_omega(&model, domain.top())?;
            Check {
                name: "operator-bounds",
                passed: lam.is_finite() && om.is_finite() && lam <= b.lambda_bound && om <= b.omega_bound,
                detail: format!(
                    "sup Lambda {lam} <= {}, sup Omega {om} <= {}",
                    b.lambda_bound, b.omega_bound
                ),
            }
        }
        None => Check {
            name: "operator-bounds",
            passed: true,
            detail: "no exponential envelope; analytic bounds do not apply".into(),
        },
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut violations = 0;
    let mut probes = 0;
    for &m in &domain.ladder {
        let mut y = vec![0.0; domain.dim];
        let mut found = 0;
        while found < 50 {
            for c in y.iter_mut() {
                *c = m * (2.0 * rng.random::<f64>() - 1.0);
            }
            if !domain.contains_truncated(&y, Some(m)) {
                continue;
            }
            found += 1;
            violations += domain.cone_violations(&y, Some(m), 100, &mut rng);
        }
        probes += found;
    }
    checks.push(Check {
        name: "cone-condition",
        passed: violations == 0,
        detail: format!("{violations} cone-ball samples outside D_n over {probes} probes"),
    });

    let cells = PartitionSpec::from_domain(domain).cells(domain.top())?;
    checks.push(Check {
        name: "partition",
        passed: cells.q >= 1,
        detail: format!("{} cells of side {} cover D_{}", cells.q, cells.side, domain.ladder.len()),
    });

    let n = cfg.simulation.population.min(VALIDATE_POPULATION);
    let pop = inst.population(n, cfg.seed)?;
    let (log, traj) = inst.simulate(&pop, None)?;
    let (again, _) = inst.simulate(&pop, None)?;
    let conserved = traj.snapshots.iter().all(|s| s.counts.iter().sum::<usize>() == n);
    let monotone = traj.snapshots.windows(2).all(|w| {
        w[1].counts[0] <= w[0].counts[0] && w[1].counts[2] >= w[0].counts[2]
    });
    checks.push(Check {
        name: "simulation-conservation",
        passed: conserved && monotone,
        detail: format!("{} events, counts sum to N = {n} after every event", log.events.len()),
    });
    checks.push(Check {
        name: "simulation-determinism",
        passed: log == again,
        detail: "two runs of the same population agree event for event".into(),
    });

    let m1 = domain.ladder[0];
    let (trunc, _) = inst.simulate(&pop, Some(m1))?;
    let outside = (0..n).any(|i| {
        trunc.initial[i] == InitialState::Susceptible
            && trunc.infection_time[i].is_finite()
            && norm(trunc.position(i)) > m1
    });
    let coupling = coupling_discrepancy(&log, &trunc, m1)?;
    checks.push(Check {
        name: "truncated-simulation",
        passed: !outside && (0.0..=1.0).contains(&coupling),
        detail: format!("no infection outside D_1, coupling discrepancy {coupling}"),
    });

    let fields = inst.solve(cfg.solver_truncation()?)?;
    let drift = conservation_drift(&fields);
    let min_s = fields.s.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v));
    checks.push(Check {
        name: "solver-conservation",
        passed: drift <= 1e-9 && min_s >= 0.0,
        detail: format!("S+I+R drift {drift:e}, min S {min_s}"),
    });
    checks.push(match apriori_check(&fields, inst.infectivity.cap) {
        Ok(r) => Check {
            name: "apriori-bounds",
            passed: true,
            detail: format!("C_hat {}, S margin {}, F margin {}", r.c_hat, r.s_margin, r.f_margin),
        },
        Err(e) => Check {
            name: "apriori-bounds",
            passed: false,
            detail: e.to_string(),
        },
    });
    Ok(checks)
}

/// Machine-readable record written to `error.json` on failure.
pub fn error_record(err: &Error) -> serde_json::Value {
    let kind = match err {
        Error::Config(_) => "config",
        Error::Parameter(_) => "parameter",
        Error::Dimension { .. } => "dimension",
        Error::SingularNormalizer { .. } => "singular-normalizer",
        Error::EventBudget { .. } => "event-budget",
        Error::Stability { .. } => "stability",
        Error::SolverDefect(_) => "solver-defect",
        Error::Usage(_) => "usage",
        Error::Io(_) => "io",
    };
    serde_json::json!({ "kind": kind, "message": err.to_string() })
}

/// 2 for configuration and usage errors, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Usage(_) => 2,
        _ => 1,
    }
}
