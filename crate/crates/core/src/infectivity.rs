//! Random infectivity curves, infectious durations and their deterministic
//! summaries `λ̄`, `λ̄⁰`, `F`, `F₀`.
//!
//! Every built-in family is piecewise constant on `J` equal fractions of the
//! duration, with level `A_k·e^{−c_k η}` on the k-th fraction. The mean curve
//! is then `Σ_k A_k·E[e^{−c_k η}; tJ/(k+1) < η ≤ tJ/k]`, which has a closed
//! form for each duration law.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of levels used to discretise the exponential-decay family.
pub const DECAY_LEVELS: usize = 64;

/// Samples used by the Monte Carlo mean estimator.
pub const MONTE_CARLO_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CurveFamily {
    /// `level` on `[0, η)`.
    Constant { level: f64 },
    /// `levels[k]` on `[kη/J, (k+1)η/J)`.
    Piecewise { levels: Vec<f64> },
    /// `peak·e^{−rate·t}` on `[0, η)`, discretised on 64 equal sub-intervals
    /// (left-endpoint values).
    ExpDecay { peak: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum DurationLaw {
    Fixed { eta: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortLaw {
    pub curve: CurveFamily,
    pub duration: DurationLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cohort {
    /// Infected at time 0 (curves `λ_{−j}`).
    Initial,
    /// Initially susceptible, infected later (curves `λ_j`).
    New,
}

/// Piecewise-constant infectivity curve as a function of infection age.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    /// Left end of each constant piece; starts at 0.
    pub breaks: Vec<f64>,
    pub levels: Vec<f64>,
    /// Infectious duration; the curve vanishes on `[η, ∞)`.
    pub eta: f64,
}

impl SampledCurve {
    pub fn zero() -> Self {
        Self {
            breaks: Vec::new(),
            levels: Vec::new(),
            eta: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, age: f64) -> f64 {
        if !(age >= 0.0) || age >= self.eta {
            return 0.0;
        }
        let k = self.breaks.partition_point(|&b| b <= age);
        self.levels[k - 1]
    }

    pub fn max_level(&self) -> f64 {
        self.levels.iter().copied().fold(0.0, f64::max)
    }
}

impl DurationLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DurationLaw::Fixed { eta } => eta > 0.0,
            DurationLaw::Exponential { rate } => rate > 0.0,
            DurationLaw::Uniform { lo, hi } => lo >= 0.0 && hi > lo,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid duration law {self:?}")))
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            DurationLaw::Fixed { eta } => {
                if t >= eta {
                    1.0
                } else {
                    0.0
                }
            }
            DurationLaw::Exponential { rate } => -(-rate * t).exp_m1(),
            DurationLaw::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// Smallest duration value, used to bound solver steps.
    pub fn min_duration(&self) -> f64 {
        match *self {
            DurationLaw::Fixed { eta } => eta,
            DurationLaw::Exponential { rate } => 1.0 / rate,
            DurationLaw::Uniform { lo, hi } => {
                if lo > 0.0 {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    /// Essential supremum of the law, `∞` for the exponential.
    pub fn ess_sup(&self) -> f64 {
        match *self {
            DurationLaw::Fixed { eta } => eta,
            DurationLaw::Exponential { .. } => f64::INFINITY,
            DurationLaw::Uniform { hi, .. } => hi,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            DurationLaw::Fixed { eta } => eta,
            DurationLaw::Exponential { rate } => Exp::new(rate).expect("positive rate").sample(rng),
            DurationLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    /// `E[e^{−cη}; lo < η ≤ hi]`.
    fn partial_exp_moment(&self, c: f64, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        match *self {
            DurationLaw::Fixed { eta } => {
                if lo < eta && eta <= hi {
                    (-c * eta).exp()
                } else {
                    0.0
                }
            }
            DurationLaw::Exponential { rate } => {
                let s = rate + c;
                let upper = if hi.is_finite() { (-s * hi).exp() } else { 0.0 };
                rate / s * ((-s * lo).exp() - upper)
            }
            DurationLaw::Uniform { lo: a, hi: b } => {
                let l = lo.max(a);
                let u = hi.min(b);
                if !(u > l) {
                    return 0.0;
                }
                let integral = if c == 0.0 {
                    u - l
                } else {
                    ((-c * l).exp() - (-c * u).exp()) / c
                };
                integral / (b - a)
            }
        }
    }
}

impl CurveFamily {
    fn validate(&self, cap: f64) -> Result<()> {
        let levels_ok = |v: &[f64]| v.iter().all(|&l| l > 0.0 && l <= cap);
        let ok = match self {
            CurveFamily::Constant { level } => levels_ok(&[*level]),
            CurveFamily::Piecewise { levels } => !levels.is_empty() && levels_ok(levels),
            CurveFamily::ExpDecay { peak, rate } => levels_ok(&[*peak]) && *rate >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "infectivity family {self:?} must have levels in (0, {cap}]"
            )))
        }
    }

    /// `(A_k, c_k)` for each of the `J` pieces.
    fn pieces(&self) -> Vec<(f64, f64)> {
        match self {
            CurveFamily::Constant { level } => vec![(*level, 0.0)],
            CurveFamily::Piecewise { levels } => levels.iter().map(|&l| (l, 0.0)).collect(),
            CurveFamily::ExpDecay { peak, rate } => (0..DECAY_LEVELS)
                .map(|k| (*peak, rate * k as f64 / DECAY_LEVELS as f64))
                .collect(),
        }
    }
}

impl CohortLaw {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> SampledCurve {
        let eta = self.duration.sample(rng);
        if !(eta > 0.0) {
            return SampledCurve::zero();
        }
        let pieces = self.curve.pieces();
        let j = pieces.len() as f64;
        let breaks = (0..pieces.len()).map(|k| eta * k as f64 / j).collect();
        let levels = pieces.iter().map(|&(a, c)| a * (-c * eta).exp()).collect();
        SampledCurve { breaks, levels, eta }
    }

    pub fn mean(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let pieces = self.curve.pieces();
        let j = pieces.len() as f64;
        pieces
            .iter()
            .enumerate()
            .map(|(k, &(a, c))| {
                let hi = if k == 0 { f64::INFINITY } else { t * j / k as f64 };
                let lo = t * j / (k + 1) as f64;
                a * self.duration.partial_exp_moment(c, lo, hi)
            })
            .sum()
    }
}

/// Laws of the two cohorts and the common cap λ*.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectivityModel {
    pub cap: f64,
    pub initial: CohortLaw,
    pub new: CohortLaw,
}

impl InfectivityModel {
    pub fn new(cap: f64, initial: CohortLaw, new: CohortLaw) -> Result<Self> {
        if !(cap >= 0.0) {
            return Err(Error::Config("infectivity cap must be non-negative".into()));
        }
        for law in [&initial, &new] {
            law.duration.validate()?;
            if cap > 0.0 {
                law.curve.validate(cap)?;
            }
        }
        Ok(Self { cap, initial, new })
    }

    /// A model in which nobody transmits: every curve is identically zero.
    pub fn silent(&self) -> bool {
        self.cap == 0.0
    }

    pub fn law(&self, cohort: Cohort) -> &CohortLaw {
        match cohort {
            Cohort::Initial => &self.initial,
            Cohort::New => &self.new,
        }
    }

    pub fn sample_curve<R: Rng>(&self, rng: &mut R, cohort: Cohort) -> SampledCurve {
        let mut curve = self.law(cohort).sample(rng);
        if self.silent() {
            curve.levels.iter_mut().for_each(|l| *l = 0.0);
            // keep η: recoveries still happen
        }
        curve
    }

    /// `λ̄(t)` (new cohort) or `λ̄⁰(t)` (initial cohort).
    pub fn mean_curve(&self, cohort: Cohort, t: f64) -> f64 {
        if self.silent() {
            return 0.0;
        }
        self.law(cohort).mean(t)
    }

    /// `F(t)` or `F₀(t)`.
    pub fn duration_cdf(&self, cohort: Cohort, t: f64) -> f64 {
        self.law(cohort).duration.cdf(t)
    }

    /// Monte Carlo estimator of the mean curve from
    /// [`MONTE_CARLO_SAMPLES`] draws.
    pub fn monte_carlo_mean<R: Rng>(&self, cohort: Cohort, rng: &mut R) -> MonteCarloMean {
        MonteCarloMean::build(
            (0..MONTE_CARLO_SAMPLES).map(|_| self.sample_curve(rng, cohort)),
        )
    }
}

/// Empirical mean curve with pointwise standard errors.
#[derive(Debug, Clone)]
pub struct MonteCarloMean {
    times: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    samples: usize,
}

impl MonteCarloMean {
    pub fn build<I: IntoIterator<Item = SampledCurve>>(curves: I) -> Self {
        let mut jumps: Vec<(f64, f64, f64)> = Vec::new();
        let mut samples = 0;
        for c in curves {
            samples += 1;
            let mut prev = 0.0;
            for (b, &l) in c.breaks.iter().zip(&c.levels) {
                jumps.push((*b, l - prev, l * l - prev * prev));
                prev = l;
            }
            if prev != 0.0 {
                jumps.push((c.eta, -prev, -prev * prev));
            }
        }
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut times = Vec::with_capacity(jumps.len());
        let mut sum = Vec::with_capacity(jumps.len());
        let mut sum_sq = Vec::with_capacity(jumps.len());
        let (mut s1, mut s2) = (0.0, 0.0);
        for (t, d1, d2) in jumps {
            s1 += d1;
            s2 += d2;
            times.push(t);
            sum.push(s1);
            sum_sq.push(s2);
        }
        Self {
            times,
            sum,
            sum_sq,
            samples,
        }
    }

    fn sums(&self, t: f64) -> (f64, f64) {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            (0.0, 0.0)
        } else {
            (self.sum[k - 1], self.sum_sq[k - 1])
        }
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.sums(t).0 / self.samples as f64
    }

    pub fn std_error(&self, t: f64) -> f64 {
        let n = self.samples as f64;
        let (s1, s2) = self.sums(t);
        let m = s1 / n;
        ((s2 / n - m * m).max(0.0) / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn constant(level: f64, duration: DurationLaw) -> CohortLaw {
        CohortLaw {
            curve: CurveFamily::Constant { level },
            duration,
        }
    }

    fn model(law: CohortLaw, cap: f64) -> InfectivityModel {
        InfectivityModel::new(cap, law.clone(), law).unwrap()
    }

    #[test]
    fn constant_fixed_curve() {
        let m = model(constant(2.0, DurationLaw::Fixed { eta: 1.0 }), 2.0);
        let mut r = rng::stream(1, rng::tag::CURVE_NEW, 0);
        let c = m.sample_curve(&mut r, Cohort::New);
        assert_eq!(c.eval(0.0), 2.0);
        assert_eq!(c.eval(0.999), 2.0);
        assert_eq!(c.eval(1.0), 0.0);
        assert_eq!(c.eval(-0.5), 0.0);
        assert_eq!(m.mean_curve(Cohort::New, 0.5), 2.0);
        assert_eq!(m.mean_curve(Cohort::New, 1.0), 0.0);
        assert_eq!(m.mean_curve(Cohort::New, -0.1), 0.0);
    }

    #[test]
    fn single_level_piecewise_is_constant() {
        let law = CohortLaw {
            curve: CurveFamily::Piecewise { levels: vec![1.5] },
            duration: DurationLaw::Exponential { rate: 0.7 },
        };
        let mut a = rng::stream(4, rng::tag::CURVE_NEW, 2);
        let mut b = a.clone();
        let p = law.sample(&mut a);
        let c = constant(1.5, law.duration).sample(&mut b);
        assert_eq!(p, c);
        for t in [0.0, 0.3, 1.7, 5.0] {
            assert_eq!(law.mean(t), constant(1.5, law.duration).mean(t));
        }
    }

    #[test]
    fn cdf_examples() {
        let fixed = DurationLaw::Fixed { eta: 1.0 };
        assert_eq!(fixed.cdf(0.5), 0.0);
        assert_eq!(fixed.cdf(1.0), 1.0);
        let e = DurationLaw::Exponential { rate: 2.0 };
        assert!((e.cdf(0.8) - (1.0 - (-1.6f64).exp())).abs() < 1e-15);
        assert_eq!(DurationLaw::Uniform { lo: 1.0, hi: 3.0 }.cdf(2.0), 0.5);
        for t in [0.0, 0.4, 1.0, 2.5, 9.0] {
            for law in [fixed, e, DurationLaw::Uniform { lo: 1.0, hi: 3.0 }] {
                assert_eq!(law.cdf(t) + law.survival(t), 1.0);
            }
        }
    }

    #[test]
    fn exponential_constant_mean() {
        let m = model(constant(2.0, DurationLaw::Exponential { rate: 1.0 }), 2.0);
        for t in [0.0f64, 0.5, 1.0, 3.0] {
            let exact = 2.0 * (-t).exp();
            assert!((m.mean_curve(Cohort::New, t) - exact).abs() < 1e-14);
        }
        let mut r = rng::stream(2, rng::tag::MONTE_CARLO, 0);
        let mc = m.monte_carlo_mean(Cohort::New, &mut r);
        for t in [0.0f64, 0.5, 1.0, 3.0] {
            let exact = 2.0 * (-t).exp();
            let se = mc.std_error(t).max(1e-12);
            assert!((mc.mean(t) - exact).abs() <= 3.0 * se + 1e-12, "t={t}");
        }
    }

    #[test]
    fn analytic_means_match_monte_carlo() {
        let laws = [
            CohortLaw {
                curve: CurveFamily::Piecewise { levels: vec![2.0, 0.5, 1.0] },
                duration: DurationLaw::Uniform { lo: 0.5, hi: 3.0 },
            },
            CohortLaw {
                curve: CurveFamily::ExpDecay { peak: 1.8, rate: 0.9 },
                duration: DurationLaw::Exponential { rate: 0.6 },
            },
            CohortLaw {
                curve: CurveFamily::ExpDecay { peak: 1.0, rate: 2.0 },
                duration: DurationLaw::Uniform { lo: 0.0, hi: 2.0 },
            },
            CohortLaw {
                curve: CurveFamily::Piecewise { levels: vec![0.3, 2.0] },
                duration: DurationLaw::Fixed { eta: 1.2 },
            },
        ];
        for (i, law) in laws.into_iter().enumerate() {
            let m = model(law, 2.0);
            let mut r = rng::stream(3, rng::tag::MONTE_CARLO, i as u64);
            let mc = m.monte_carlo_mean(Cohort::New, &mut r);
            for t in [0.0, 0.2, 0.55, 1.0, 1.9, 2.7, 4.0] {
                let exact = m.mean_curve(Cohort::New, t);
                let tol = 4.0 * mc.std_error(t) + 1e-9;
                assert!((mc.mean(t) - exact).abs() <= tol, "law {i} t={t}: {} vs {exact}", mc.mean(t));
            }
        }
    }

    #[test]
    fn constant_family_mean_is_cap_times_survival() {
        let law = constant(1.3, DurationLaw::Uniform { lo: 0.5, hi: 2.5 });
        for t in [0.0, 0.5, 1.0, 2.0, 2.5, 3.0] {
            assert!((law.mean(t) - 1.3 * law.duration.survival(t)).abs() < 1e-15);
        }
        let fixed = constant(1.3, DurationLaw::Fixed { eta: 2.0 });
        assert_eq!(fixed.mean(2.5), 0.0);
    }

    #[test]
    fn sampled_curves_respect_cap_and_duration() {
        let law = CohortLaw {
            curve: CurveFamily::ExpDecay { peak: 2.0, rate: 3.0 },
            duration: DurationLaw::Exponential { rate: 1.0 },
        };
        let m = model(law, 2.0);
        let mut r = rng::stream(8, rng::tag::CURVE_NEW, 0);
        for _ in 0..1000 {
            let c = m.sample_curve(&mut r, Cohort::New);
            assert_eq!(c.levels.len(), DECAY_LEVELS);
            assert!(c.levels.iter().all(|&l| l > 0.0 && l <= 2.0));
            // η = sup{t : λ(t) > 0}
            assert!(c.eval(c.eta * (1.0 - 1e-12)) > 0.0);
            assert_eq!(c.eval(c.eta), 0.0);
        }
    }

    #[test]
    fn invalid_levels_rejected() {
        let law = constant(3.0, DurationLaw::Fixed { eta: 1.0 });
        assert!(InfectivityModel::new(2.0, law.clone(), law).is_err());
        let bad = constant(1.0, DurationLaw::Uniform { lo: 2.0, hi: 1.0 });
        assert!(InfectivityModel::new(2.0, bad.clone(), bad).is_err());
    }
}
