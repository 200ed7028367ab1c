//! Experiments confronting stochastic runs with the deterministic limit.

mod instance;
mod lln;
mod report;
mod suite;
mod truncation;

pub use instance::Instance;
pub use lln::{fit_slope, lln_experiment, Aggregate, ConvergenceReport, LlnRow, MIN_TIME_POINTS};
pub use report::{emit_report, LabReport};
pub use suite::{SuiteParams, TestFunction, TestFunctionSuite};
pub use truncation::{truncation_experiment, TruncationReport, TruncationRow};
