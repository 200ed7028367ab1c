use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("normalizer {value:e} at {point:?} is below the floor {floor:e}; quadrature grid too coarse")]
    SingularNormalizer {
        value: f64,
        floor: f64,
        point: Vec<f64>,
    },
    #[error("event budget of {budget} exhausted at t = {time}")]
    EventBudget { budget: usize, time: f64 },
    #[error("negative susceptible density {value:e} at step {step}; retry with dt <= {suggested_dt:e}")]
    Stability {
        step: usize,
        value: f64,
        suggested_dt: f64,
    },
    #[error("solver defect: {0}")]
    SolverDefect(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
