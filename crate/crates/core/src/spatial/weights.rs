use super::{BaselineDensity, KernelSpec, Lattice};
use crate::error::{Error, Result};

/// Normalizers below this value are reported as errors, never clamped.
pub const NORMALIZER_FLOOR: f64 = 1e-12;

/// Deterministic interaction weights Λ, Λ_n and Ω evaluated by midpoint
/// quadrature on a [`Lattice`].
#[derive(Debug, Clone, Copy)]
pub struct WeightModel<'a> {
    pub kernel: &'a KernelSpec,
    pub density: &'a BaselineDensity,
    pub lattice: Lattice,
    pub gamma: f64,
    /// `Some(M_n)` restricts the normalizer integral to `D_n`.
    pub truncation: Option<f64>,
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "gamma must lie in [0,1) (got {gamma})"
        )))
    }
}

impl<'a> WeightModel<'a> {
    pub fn new(
        kernel: &'a KernelSpec,
        density: &'a BaselineDensity,
        lattice: Lattice,
        gamma: f64,
        truncation: Option<f64>,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            kernel,
            density,
            lattice,
            gamma,
            truncation,
        })
    }

    pub fn with_truncation(&self, truncation: Option<f64>) -> Self {
        Self { truncation, ..*self }
    }

    /// ν(y) = ∫ K(z, y) μ̄(z) dz over D, or over D_n when truncated.
    pub fn normalizer(&self, y: &[f64]) -> Result<f64> {
        let value = self.raw_normalizer(y);
        if value < NORMALIZER_FLOOR {
            return Err(Error::SingularNormalizer {
                value,
                floor: NORMALIZER_FLOOR,
                point: y.to_vec(),
            });
        }
        Ok(value)
    }

    pub(crate) fn raw_normalizer(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        let trunc2 = self.truncation.map(|m| m * m);
        self.lattice
            .for_each_node_in_ball(y, self.kernel.support, |z| {
                if let Some(m2) = trunc2 {
                    if z.iter().map(|c| c * c).sum::<f64>() > m2 {
                        return;
                    }
                }
                acc += self.kernel.eval_unchecked(z, y) * self.density.mu(z);
            });
        acc * self.lattice.cell_volume()
    }

    /// ν(y)^{−γ}, exactly 1 when γ = 0.
    pub fn inverse_normalizer_power(&self, y: &[f64]) -> Result<f64> {
        if self.gamma == 0.0 {
            return Ok(1.0);
        }
        Ok(self.normalizer(y)?.powf(-self.gamma))
    }

    /// Λ(x, y) = K(x, y) μ̄(y) / ν(y)^γ.
    pub fn lambda_weight(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let k = self.kernel.eval(x, y)?;
        if k == 0.0 {
            return Ok(0.0);
        }
        Ok(k * self.density.mu(y) * self.inverse_normalizer_power(y)?)
    }

    /// Ω(x, y) = K(x, y) μ̄(x) / ν(y)^γ.
    pub fn omega_weight(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let k = self.kernel.eval(x, y)?;
        if k == 0.0 {
            return Ok(0.0);
        }
        Ok(k * self.density.mu(x) * self.inverse_normalizer_power(y)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{DensityFamily, DomainSpec, KernelFamily, Shape};

    fn uniform_setup() -> (KernelSpec, BaselineDensity) {
        let dom = DomainSpec::new(1, Shape::FullSpace, 0.5, 0.5, vec![6.0]).unwrap();
        let k = KernelSpec::new(KernelFamily::Indicator, 1.0, 1.0, 1.0).unwrap();
        let dens = BaselineDensity::new(
            &dom,
            1.0,
            [1.0, 0.0, 0.0],
            [DensityFamily::UniformBox { half_width: 5.0 }; 3],
        )
        .unwrap();
        (k, dens)
    }

    /// Independent oracle: fine Riemann sum of ∫ K(z, y) μ̄(z) dz on [y−R̄, y+R̄].
    fn oracle_normalizer(k: &KernelSpec, dens: &BaselineDensity, y: f64) -> f64 {
        let n = 200_000;
        let a = y - k.support;
        let w = 2.0 * k.support / n as f64;
        (0..n)
            .map(|i| {
                let z = a + (i as f64 + 0.5) * w;
                k.profile((z - y).abs()) * dens.mu(&[z])
            })
            .sum::<f64>()
            * w
    }

    #[test]
    fn normalizer_uniform_example() {
        let (k, dens) = uniform_setup();
        let lat = Lattice::new(1, Shape::FullSpace, 0.01);
        let m = WeightModel::new(&k, &dens, lat, 0.0, None).unwrap();
        let nu = m.normalizer(&[0.0]).unwrap();
        assert!((nu - 0.2).abs() < 1e-12);
        assert!((oracle_normalizer(&k, &dens, 0.0) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn lambda_uniform_example() {
        let (k, dens) = uniform_setup();
        let lat = Lattice::new(1, Shape::FullSpace, 0.01);
        let m = WeightModel::new(&k, &dens, lat, 0.5, None).unwrap();
        let expect = 0.1 / oracle_normalizer(&k, &dens, 0.5).sqrt();
        let got = m.lambda_weight(&[0.0], &[0.5]).unwrap();
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
        assert!((got - 0.223_606_797_749_979).abs() < 1e-6);
        assert_eq!(m.lambda_weight(&[0.0], &[1.5]).unwrap(), 0.0);
    }

    #[test]
    fn normalizer_is_one_for_global_kernel() {
        let dom = DomainSpec::new(2, Shape::FullSpace, 0.5, 0.5, vec![6.0]).unwrap();
        let k = KernelSpec::new(KernelFamily::Indicator, 1.0, 4.0, 1.0).unwrap();
        let dens = BaselineDensity::new(
            &dom,
            1.0,
            [1.0, 0.0, 0.0],
            [DensityFamily::UniformBox { half_width: 1.0 }; 3],
        )
        .unwrap();
        let lat = Lattice::new(2, Shape::FullSpace, 2.0 / 64.0);
        let m = WeightModel::new(&k, &dens, lat, 0.3, Some(2.0)).unwrap();
        for y in [[0.0, 0.0], [0.9, -0.9], [-0.5, 0.2]] {
            assert!((m.normalizer(&y).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_irrelevant_when_support_inside() {
        let (k, dens) = uniform_setup();
        let lat = Lattice::new(1, Shape::FullSpace, 0.05);
        let full = WeightModel::new(&k, &dens, lat, 0.5, None).unwrap();
        let trunc = full.with_truncation(Some(3.0));
        assert_eq!(full.normalizer(&[1.5]).unwrap(), trunc.normalizer(&[1.5]).unwrap());
        assert!(trunc.normalizer(&[2.8]).unwrap() < full.normalizer(&[2.8]).unwrap());
    }

    #[test]
    fn gamma_zero_and_rejection() {
        let (k, dens) = uniform_setup();
        let lat = Lattice::new(1, Shape::FullSpace, 0.05);
        assert!(matches!(
            WeightModel::new(&k, &dens, lat, 1.0, None),
            Err(Error::Parameter(_))
        ));
        let m = WeightModel::new(&k, &dens, lat, 0.0, None).unwrap();
        for (x, y) in [(0.0, 0.3), (1.0, 0.2), (4.9, 4.5)] {
            assert_eq!(m.lambda_weight(&[x], &[y]).unwrap(), k.profile((x - y).abs()) * dens.mu(&[y]));
            assert_eq!(m.omega_weight(&[x], &[y]).unwrap(), k.profile((x - y).abs()) * dens.mu(&[x]));
        }
    }

    #[test]
    fn singular_normalizer_is_an_error() {
        let (k, dens) = uniform_setup();
        let lat = Lattice::new(1, Shape::FullSpace, 0.05);
        let m = WeightModel::new(&k, &dens, lat, 0.5, None).unwrap();
        assert!(matches!(
            m.normalizer(&[7.0]),
            Err(Error::SingularNormalizer { .. })
        ));
    }

    #[test]
    fn omega_lambda_swap_identities() {
        let dom = DomainSpec::new(2, Shape::FullSpace, 0.5, 0.5, vec![6.0]).unwrap();
        let k = KernelSpec::new(KernelFamily::Tent, 1.5, 1.0, 0.5).unwrap();
        let dens = BaselineDensity::new(
            &dom,
            1.0,
            [0.9, 0.1, 0.0],
            [
                DensityFamily::ExpPower { rate: 1.0 },
                DensityFamily::ExpPower { rate: 2.0 },
                DensityFamily::ExpPower { rate: 1.0 },
            ],
        )
        .unwrap();
        let lat = Lattice::new(2, Shape::FullSpace, 0.05);
        let m = WeightModel::new(&k, &dens, lat, 0.6, None).unwrap();
        let mut r = crate::rng::stream(5, crate::rng::tag::MONTE_CARLO, 1);
        use rand::Rng;
        for _ in 0..50 {
            let x = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
            let y = [x[0] + r.random_range(-0.7..0.7), x[1] + r.random_range(-0.7..0.7)];
            let (mx, my) = (dens.mu(&x), dens.mu(&y));
            let (nx, ny) = (m.normalizer(&x).unwrap(), m.normalizer(&y).unwrap());
            let om = m.omega_weight(&x, &y).unwrap();
            let lam_xy = m.lambda_weight(&x, &y).unwrap();
            let lam_yx = m.lambda_weight(&y, &x).unwrap();
            assert!((om * my - lam_xy * mx).abs() <= 1e-13 * (1.0 + om * my));
            let rhs = lam_yx * my * (nx / ny).powf(0.6);
            assert!((om * my - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
        assert_eq!(m.omega_weight(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), m.lambda_weight(&[0.3, 0.1], &[0.3, 0.1]).unwrap());
    }
}
