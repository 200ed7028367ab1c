use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spatial_sir::config::parse_config;
use spatial_sir::pipeline::{error_record, exit_code, run, Command};
use spatial_sir::{Error, Result};

/// Spatial SIR epidemics with age-dependent infectivity.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Exact simulation of the individual-based model.
    Simulate(Common),
    /// Deterministic limit on the configured rung.
    Solve(Common),
    /// Law-of-large-numbers experiment.
    Lln(Common),
    /// Truncation ladder experiment.
    Truncation(Common),
    /// Invariant checks of the configuration.
    Validate(Common),
}

fn execute(command: Command, args: &Common) -> Result<bool> {
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Usage(e.to_string()))?;
    }
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        let v = cfg.violations();
        if !v.is_empty() {
            return Err(Error::Config(v.join("; ")));
        }
    }
    let outcome = run(command, &cfg, &args.out)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Lln(a) => (Command::Lln, a),
        Sub::Truncation(a) => (Command::Truncation, a),
        Sub::Validate(a) => (Command::Validate, a),
    };
    match execute(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed; see validate.txt");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            if fs::create_dir_all(&args.out).is_ok() {
                let record = serde_json::to_string_pretty(&error_record(&err)).unwrap_or_default();
                let _ = fs::write(args.out.join("error.json"), record + "\n");
            }
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
