use super::*;
use crate::infectivity::{CohortLaw, CurveFamily, DurationLaw, InfectivityModel};
use crate::spatial::{
    BaselineDensity, DensityFamily, DomainSpec, KernelFamily, KernelSpec, Lattice, Shape,
    WeightModel,
};

fn markov_model(cap: f64, rate: f64) -> InfectivityModel {
    let law = CohortLaw {
        curve: CurveFamily::Constant { level: cap },
        duration: DurationLaw::Exponential { rate },
    };
    InfectivityModel::new(cap, law.clone(), law).unwrap()
}

fn box_density(fractions: [f64; 3]) -> BaselineDensity {
    let dom = DomainSpec::new(1, Shape::FullSpace, 0.5, 0.5, vec![1.0]).unwrap();
    BaselineDensity::new(&dom, 1.0, fractions, [DensityFamily::UniformBox { half_width: 0.5 }; 3]).unwrap()
}

fn envelope_density(dim: usize, fractions: [f64; 3]) -> BaselineDensity {
    let dom = DomainSpec::new(dim, Shape::FullSpace, 0.5, 0.5, vec![2.0, 3.0]).unwrap();
    BaselineDensity::new(
        &dom,
        1.0,
        fractions,
        [
            DensityFamily::ExpPower { rate: 1.0 },
            DensityFamily::ExpPower { rate: 2.0 },
            DensityFamily::ExpPower { rate: 1.0 },
        ],
    )
    .unwrap()
}

fn indicator(support: f64) -> KernelSpec {
    KernelSpec::new(KernelFamily::Indicator, 1.0, support, support).unwrap()
}

fn spec(spacing: f64, dt: f64, horizon: f64, scheme: Scheme) -> GridSpec {
    GridSpec {
        spacing,
        dt,
        horizon,
        scheme,
    }
}

/// Classical SIR by fourth-order Runge–Kutta.
fn sir_rk4(beta: f64, rho: f64, s0: f64, i0: f64, t: f64, h: f64) -> Vec<(f64, f64)> {
    let f = |s: f64, i: f64| (-beta * s * i, beta * s * i - rho * i);
    let steps = (t / h).round() as usize;
    let mut out = vec![(s0, i0)];
    let (mut s, mut i) = (s0, i0);
    for _ in 0..steps {
        let k1 = f(s, i);
        let k2 = f(s + 0.5 * h * k1.0, i + 0.5 * h * k1.1);
        let k3 = f(s + 0.5 * h * k2.0, i + 0.5 * h * k2.1);
        let k4 = f(s + h * k3.0, i + h * k3.1);
        s += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        i += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((s, i));
    }
    out
}

fn max_conservation_drift(f: &LimitFields) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..=f.steps() {
        for x in 0..f.grid.len() {
            let now = f.s[k][x] + f.i[k][x] + f.r[k][x];
            let then = f.s[0][x] + f.i[0][x] + f.r[0][x];
            worst = worst.max((now - then).abs());
        }
    }
    worst
}

#[test]
fn no_initial_infection_freezes_everything() {
    let dens = envelope_density(1, [0.9, 0.0, 0.1]);
    let kernel = indicator(1.0);
    let inf = markov_model(2.0, 1.0);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.5,
        truncation: 3.0,
    };
    for scheme in [Scheme::Euler, Scheme::Trapezoid] {
        let f = solve(&p, &spec(0.1, 0.05, 2.0, scheme)).unwrap();
        for k in 0..=f.steps() {
            assert_eq!(f.s[k], f.s[0]);
            assert_eq!(f.r[k], f.r[0]);
            assert!(f.f[k].iter().chain(&f.i[k]).all(|&v| v == 0.0));
        }
    }
}

#[test]
fn silent_model_only_recovers() {
    let dens = envelope_density(1, [0.8, 0.15, 0.05]);
    let kernel = indicator(1.0);
    let mut inf = markov_model(1.0, 2.0);
    inf.cap = 0.0;
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.3,
        truncation: 3.0,
    };
    let f = solve(&p, &spec(0.1, 0.05, 2.0, Scheme::Euler)).unwrap();
    for k in [0, 7, 40] {
        let t = f.time(k);
        for x in 0..f.grid.len() {
            let [s0, i0, r0] = f.grid.shares[x];
            assert_eq!(f.s[k][x], s0);
            assert_eq!(f.f[k][x], 0.0);
            assert!((f.i[k][x] - i0 * (-2.0 * t).exp()).abs() < 1e-15);
            assert!((f.r[k][x] - r0 - i0 * (1.0 - (-2.0 * t).exp())).abs() < 1e-15);
        }
    }
}

#[test]
fn conservation_both_schemes() {
    let dens = envelope_density(2, [0.9, 0.08, 0.02]);
    let kernel = KernelSpec::new(KernelFamily::Tent, 1.0, 1.0, 0.5).unwrap();
    let law = CohortLaw {
        curve: CurveFamily::ExpDecay { peak: 2.0, rate: 0.5 },
        duration: DurationLaw::Uniform { lo: 0.5, hi: 2.0 },
    };
    let inf = InfectivityModel::new(2.0, law.clone(), law).unwrap();
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.5,
        truncation: 2.0,
    };
    for scheme in [Scheme::Euler, Scheme::Trapezoid] {
        let f = solve(&p, &spec(0.25, 0.05, 3.0, scheme)).unwrap();
        assert!(max_conservation_drift(&f) <= 1e-9);
        for k in 0..=f.steps() {
            for v in [&f.s[k], &f.f[k], &f.i[k], &f.r[k]] {
                assert!(v.iter().all(|&x| x >= 0.0));
            }
        }
        let total: f64 = f.s[f.steps()].iter().sum();
        assert!(total < f.s[0].iter().sum::<f64>());
    }
}

#[test]
fn markovian_instance_matches_ode() {
    let (cap, rho) = (2.0, 1.0);
    let dens = box_density([0.95, 0.05, 0.0]);
    let kernel = indicator(1.0);
    let inf = markov_model(cap, rho);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.5,
        truncation: 1.0,
    };
    let dt = 4e-3;
    let horizon = 6.0;
    let f = solve(&p, &spec(1.0 / 64.0, dt, horizon, Scheme::Euler)).unwrap();
    assert_eq!(f.grid.len(), 64);
    let ode = sir_rk4(cap, rho, 0.95, 0.05, horizon, dt);
    let ones = vec![1.0; f.grid.len()];
    let mut err = 0.0f64;
    for k in 0..=f.steps() {
        err = err.max((f.pairing(Field::S, k, &ones) - ode[k].0).abs());
        err = err.max((f.pairing(Field::I, k, &ones) - ode[k].1).abs());
    }
    assert!(err <= 2e-2, "sup error {err}");
    let rep = apriori_check(&f, cap).unwrap();
    assert!(rep.s_margin >= 0.0 && rep.f_margin >= 0.0);
    assert!((rep.c_hat - 1.0).abs() < 1e-12);
}

#[test]
fn force_matches_independent_quadrature() {
    let dens = envelope_density(2, [0.9, 0.08, 0.02]);
    let kernel = KernelSpec::new(KernelFamily::Tent, 1.0, 1.0, 0.5).unwrap();
    let inf = markov_model(1.5, 1.0);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.7,
        truncation: 2.0,
    };
    let f = solve(&p, &spec(0.25, 0.05, 1.0, Scheme::Euler)).unwrap();
    let model = WeightModel::new(&kernel, &dens, f.grid.lattice, 0.7, Some(2.0)).unwrap();
    let vol = f.grid.lattice.cell_volume();
    for k in [0, 10, 20] {
        let gamma_bar = f.force(k);
        for x in (0..f.grid.len()).step_by(7) {
            let brute: f64 = (0..f.grid.len())
                .map(|y| model.lambda_weight(f.grid.node(x), f.grid.node(y)).unwrap() * f.f[k][y] * vol)
                .sum();
            assert!((gamma_bar[x] - brute).abs() <= 1e-12 * (1.0 + brute.abs()));
        }
    }
}

#[test]
fn large_step_reports_instability() {
    let dens = box_density([0.5, 0.5, 0.0]);
    let kernel = indicator(1.0);
    let law = CohortLaw {
        curve: CurveFamily::Constant { level: 50.0 },
        duration: DurationLaw::Fixed { eta: 10.0 },
    };
    let inf = InfectivityModel::new(50.0, law.clone(), law).unwrap();
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.0,
        truncation: 1.0,
    };
    match solve(&p, &spec(1.0 / 8.0, 2.0, 10.0, Scheme::Euler)) {
        Err(crate::Error::Stability { suggested_dt, .. }) => assert!(suggested_dt < 2.0),
        other => panic!("expected stability error, got {other:?}"),
    }
}

#[test]
fn rejects_bad_grids() {
    let dens = box_density([0.5, 0.5, 0.0]);
    let kernel = indicator(1.0);
    let inf = markov_model(1.0, 1.0);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.0,
        truncation: 1.0,
    };
    assert!(solve(&p, &spec(0.3, 0.01, 1.0, Scheme::Euler)).is_err());
    assert!(solve(&p, &spec(0.1, 0.5, 1.0, Scheme::Euler)).is_err());
    assert!(solve(&p, &spec(0.1, 0.03, 1.0, Scheme::Euler)).is_err());
    assert!(solve(&LimitProblem { gamma: 1.0, ..p }, &spec(0.1, 0.01, 1.0, Scheme::Euler)).is_err());
}

#[test]
fn pi_n_cases() {
    let dens = envelope_density(1, [0.9, 0.08, 0.02]);
    let kernel = indicator(1.0);
    let lat = Lattice::new(1, Shape::FullSpace, 0.01);
    let zero = WeightModel::new(&kernel, &dens, lat, 0.0, None).unwrap();
    for m in [2.0, 3.0, 4.0] {
        assert_eq!(pi_n(&zero, m, m + 1.0).unwrap(), 0.0);
    }
    let half = WeightModel::new(&kernel, &dens, lat, 0.5, None).unwrap();
    assert!(pi_n(&half, 2.0, 2.5).is_err());
    let values: Vec<f64> = [2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|&m| pi_n(&half, m, m + 1.0).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    assert!(values[0] > 0.0);

    // density supported well inside D_n
    let boxed = box_density([0.9, 0.1, 0.0]);
    let inside = WeightModel::new(&kernel, &boxed, lat, 0.5, None).unwrap();
    assert_eq!(pi_n(&inside, 2.0, 3.0).unwrap(), 0.0);
}

#[test]
fn apriori_on_frozen_and_active() {
    let dens = envelope_density(1, [0.9, 0.08, 0.02]);
    let kernel = indicator(1.0);
    let inf = markov_model(1.0, 1.0);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.5,
        truncation: 3.0,
    };
    let f = solve(&p, &spec(0.05, 0.02, 4.0, Scheme::Euler)).unwrap();
    let rep = apriori_check(&f, 1.0).unwrap();
    assert!(rep.s_margin >= 0.0 && rep.f_margin >= 0.0);
    let sups: Vec<f64> = f.s.iter().map(|v| v.iter().fold(0.0, |m: f64, x| m.max(*x))).collect();
    assert!(sups.windows(2).all(|w| w[1] <= w[0]));

    let mut silent = inf.clone();
    silent.cap = 0.0;
    let frozen = solve(&LimitProblem { infectivity: &silent, ..p }, &spec(0.05, 0.02, 1.0, Scheme::Euler)).unwrap();
    let rep = apriori_check(&frozen, 1.0).unwrap();
    assert_eq!(rep.s_margin, 0.0);
}

#[test]
fn weight_cache_round_trip() {
    let dens = envelope_density(1, [0.9, 0.08, 0.02]);
    let kernel = indicator(1.0);
    let inf = markov_model(1.0, 1.0);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.5,
        truncation: 3.0,
    };
    let dir = tempfile::tempdir().unwrap();
    let g = spec(0.05, 0.05, 1.0, Scheme::Euler);
    let a = solve_cached(&p, &g, Some(dir.path())).unwrap();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let b = solve_cached(&p, &g, Some(dir.path())).unwrap();
    let c = solve(&p, &g).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let key = weight_key(&a.grid, &kernel, &dens, 0.5);
    let path = files[0].as_ref().unwrap().path();
    assert_eq!(load_weights(&path, &key).unwrap(), Some(a.weights.clone()));
    let other = weight_key(&a.grid, &kernel, &dens, 0.25);
    assert_eq!(load_weights(&path, &other).unwrap(), None);
}

#[test]
fn euler_is_first_order_and_trapezoid_agrees() {
    let dens = box_density([0.95, 0.05, 0.0]);
    let kernel = indicator(1.0);
    let inf = markov_model(2.0, 1.0);
    let p = LimitProblem {
        density: &dens,
        kernel: &kernel,
        infectivity: &inf,
        gamma: 0.0,
        truncation: 1.0,
    };
    let horizon = 4.0;
    let ones = vec![1.0; 16];
    let run = |dt: f64, scheme| {
        let f = solve(&p, &spec(1.0 / 16.0, dt, horizon, scheme)).unwrap();
        let stride = ((0.1 / dt).round()) as usize;
        (0..=f.steps())
            .step_by(stride)
            .map(|k| f.pairing(Field::S, k, &ones))
            .collect::<Vec<_>>()
    };
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let e1 = run(0.02, Scheme::Euler);
    let e2 = run(0.01, Scheme::Euler);
    let e3 = run(0.005, Scheme::Euler);
    let ratio = sup(&e1, &e2) / sup(&e2, &e3);
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    let rich: Vec<f64> = e2.iter().zip(&e3).map(|(a, b)| 2.0 * b - a).collect();
    let trap = run(0.005, Scheme::Trapezoid);
    assert!(sup(&rich, &trap) < 1e-3);
}

#[test]
fn l1_distance_and_csv() {
    let dens = envelope_density(1, [0.9, 0.08, 0.02]);
    let kernel = indicator(1.0);
    let inf = markov_model(1.0, 1.0);
    let mk = |m: f64| {
        solve(
            &LimitProblem {
                density: &dens,
                kernel: &kernel,
                infectivity: &inf,
                gamma: 0.5,
                truncation: m,
            },
            &spec(0.05, 0.05, 3.0, Scheme::Euler),
        )
        .unwrap()
    };
    let top = mk(6.0);
    assert_eq!(l1_distance(&top, &top).unwrap(), 0.0);
    let d: Vec<f64> = [2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|&m| l1_distance(&mk(m), &top).unwrap())
        .collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert!(l1_distance(&top, &mk(2.0)).is_err());

    let mut buf = Vec::new();
    top.write_csv(&mut buf, 20).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x0,S,F,I,R\n"));
    assert_eq!(text.lines().count(), 1 + 4 * top.grid.len());
}
