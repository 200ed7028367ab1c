use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounded test function with `sup |φ| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant,
    /// `Π_i σ(k(x_i − c_i + w))·σ(k(c_i + w − x_i))`.
    SigmoidBump {
        center: Vec<f64>,
        half_width: f64,
        steepness: f64,
    },
    /// `exp(−‖x − c‖² / (2s²))`.
    GaussianBump { center: Vec<f64>, width: f64 },
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::SigmoidBump {
                center,
                half_width,
                steepness,
            } => x
                .iter()
                .zip(center)
                .map(|(xi, ci)| {
                    sigmoid(steepness * (xi - ci + half_width))
                        * sigmoid(steepness * (ci + half_width - xi))
                })
                .product(),
            TestFunction::GaussianBump { center, width } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant => "const".into(),
            TestFunction::SigmoidBump { center, .. } => format!("sigmoid{center:?}"),
            TestFunction::GaussianBump { center, .. } => format!("gauss{center:?}"),
        }
    }
}

/// Bump centres form the product lattice `centers^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteParams {
    pub centers: Vec<f64>,
    pub width: f64,
    #[serde(default = "default_steepness")]
    pub steepness: f64,
}

fn default_steepness() -> f64 {
    4.0
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            centers: vec![-1.0, 0.0, 1.0],
            width: 0.5,
            steepness: default_steepness(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSuite {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionSuite {
    pub const MIN_SIZE: usize = 5;

    /// The constant, then a sigmoid and a Gaussian bump at every centre.
    pub fn new(dim: usize, params: &SuiteParams) -> Result<Self> {
        if !(params.width > 0.0) || !(params.steepness > 0.0) {
            return Err(Error::Config(
                "test-function width and steepness must be positive".into(),
            ));
        }
        let mut centers: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..dim {
            centers = centers
                .into_iter()
                .flat_map(|c| {
                    params.centers.iter().map(move |&v| {
                        let mut next = c.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        let mut functions = vec![TestFunction::Constant];
        for c in centers {
            functions.push(TestFunction::SigmoidBump {
                center: c.clone(),
                half_width: params.width,
                steepness: params.steepness,
            });
            functions.push(TestFunction::GaussianBump {
                center: c,
                width: params.width,
            });
        }
        if functions.len() < Self::MIN_SIZE {
            return Err(Error::Config(format!(
                "test-function suite has {} members, needs at least {}",
                functions.len(),
                Self::MIN_SIZE
            )));
        }
        Ok(Self { functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// `values[f][i] = φ_f(point i)` for row-major points.
    pub fn tabulate(&self, points: &[f64], dim: usize) -> Vec<Vec<f64>> {
        self.functions
            .iter()
            .map(|f| points.chunks(dim).map(|x| f.eval(x)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn suite_sizes() {
        assert_eq!(TestFunctionSuite::new(1, &SuiteParams::default()).unwrap().len(), 7);
        assert_eq!(TestFunctionSuite::new(2, &SuiteParams::default()).unwrap().len(), 19);
        let tiny = SuiteParams {
            centers: vec![0.0],
            ..SuiteParams::default()
        };
        assert!(TestFunctionSuite::new(1, &tiny).is_err());
    }

    proptest! {
        #[test]
        fn bounded_by_one(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let suite = TestFunctionSuite::new(2, &SuiteParams::default()).unwrap();
            for f in &suite.functions {
                let v = f.eval(&[x, y]);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
