use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::lln::ConvergenceReport;
use super::truncation::TruncationReport;
use crate::agent::Compartment;
use crate::error::Result;

/// Slope band reported for the law-of-large-numbers runs. It is a health
/// check of the implementation, not a rate established by theory.
pub const SLOPE_BAND: (f64, f64) = (-0.7, -0.3);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabReport {
    pub lln: Option<ConvergenceReport>,
    pub truncation: Option<TruncationReport>,
}

/// Writes `lln.csv`, `truncation.csv` and `summary.txt` into `dir`.
pub fn emit_report(report: &LabReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut lln = String::from("compartment,N,seed,sup_error\n");
    let mut trunc = String::from("n,M_n,l1_distance,pi_n,coupling_mean\n");
    let mut summary = String::new();

    if let Some(r) = &report.lln {
        for row in &r.rows {
            let _ = writeln!(
                lln,
                "{},{},{},{}",
                row.compartment.label(),
                row.n,
                row.seed,
                row.sup_error
            );
        }
        let _ = writeln!(summary, "law of large numbers");
        let _ = writeln!(summary, "  time points: {}", r.time_points);
        let _ = writeln!(summary, "  grid mass residual: {}", r.quadrature_residual);
        for c in Compartment::ALL {
            for a in r.aggregates.iter().filter(|a| a.compartment == c) {
                let _ = writeln!(
                    summary,
                    "  {:<5} N={:<8} mean={} sd={}",
                    c.label(),
                    a.n,
                    a.mean,
                    a.sd
                );
            }
            if let Some(s) = r.slope(c) {
                let _ = writeln!(
                    summary,
                    "  {:<5} log-log slope {} (health-check band [{}, {}])",
                    c.label(),
                    s,
                    SLOPE_BAND.0,
                    SLOPE_BAND.1
                );
            }
        }
    }
    if let Some(t) = &report.truncation {
        for row in &t.rows {
            let _ = writeln!(
                trunc,
                "{},{},{},{},{}",
                row.n, row.radius, row.l1_distance, row.pi_n, row.coupling_mean
            );
        }
        let _ = writeln!(summary, "truncation");
        let _ = writeln!(
            summary,
            "  coupling over {} seeds at N={}",
            t.seeds, t.population
        );
        for row in &t.rows {
            let _ = writeln!(
                summary,
                "  n={} M_n={} l1={} pi_n={} coupling={}",
                row.n, row.radius, row.l1_distance, row.pi_n, row.coupling_mean
            );
        }
    }
    if summary.is_empty() {
        summary.push_str("empty report\n");
    }
    let files = [
        (dir.join("lln.csv"), lln),
        (dir.join("truncation.csv"), trunc),
        (dir.join("summary.txt"), summary),
    ];
    let mut out = Vec::new();
    for (path, body) in files {
        fs::write(&path, body)?;
        out.push(path);
    }
    Ok(out)
}
