//! `pmlab` — command-line frontend of the numerical laboratory.
//!
//! One invocation executes one JSON run configuration and writes its
//! reports (JSON for machines, CSV for tables) into the output
//! directory.  Runs are deterministic: given the same configuration and
//! seed, repeated invocations produce byte-identical reports regardless
//! of the worker count, because the work pool preserves configuration
//! order when assembling output.
//!
//! Exit codes: 0 = all verdicts pass; 2 = at least one verdict failed;
//! 3 = a precondition-unmet outcome occurred and `--fatal-unmet` was
//! set; 4 = malformed configuration or I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{CommandKind, RunConfig};
use pmlab::error::Error;

/// Command-line flags; everything else lives in the JSON configuration.
#[derive(Debug, Parser)]
#[command(
    name = "pmlab",
    version,
    about = "Numerical laboratory for singular porous-medium / fast-diffusion systems"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for reports (created if missing).
    #[arg(long)]
    out: PathBuf,

    /// RNG seed, overriding the configuration's `seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for independent checks (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Exit with status 3 when any precondition-unmet outcome occurs.
    #[arg(long, default_value_t = false)]
    fatal_unmet: bool,
}

/// Aggregated verdict counts of one run.
#[derive(Debug, Default, Clone, Copy)]
pub struct Outcome {
    pub passed: usize,
    pub failed: usize,
    pub unmet: usize,
}

impl Outcome {
    fn absorb(&mut self, other: Outcome) {
        self.passed += other.passed;
        self.failed += other.failed;
        self.unmet += other.unmet;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!(
                "verdicts: {} passed, {} failed, {} precondition-unmet",
                outcome.passed, outcome.failed, outcome.unmet
            );
            if outcome.unmet > 0 && cli.fatal_unmet {
                ExitCode::from(3)
            } else if outcome.failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        Error::Config(format!("cannot read config '{}': {e}", cli.config.display()))
    })?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "schema violation in '{}' at line {}, column {}: {e}",
            cli.config.display(),
            e.line(),
            e.column()
        ))
    })?;
    cfg.require_seed_for_monte_carlo(cli.seed)?;
    let seed = cfg.seed_with_override(cli.seed);

    std::fs::create_dir_all(&cli.out).map_err(|e| {
        Error::Config(format!(
            "cannot create output directory '{}': {e}",
            cli.out.display()
        ))
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;

    pool.install(|| match cfg.command {
        CommandKind::Exponents => commands::exponents::run(&cfg, &cli.out),
        CommandKind::Solution => commands::solution::run(&cfg, &cli.out),
        CommandKind::Probe => commands::probe::run(&cfg, &cli.out),
        CommandKind::Cylinders => commands::cylinders::run(&cfg, &cli.out),
        CommandKind::Cover => commands::cover::run(&cfg, seed, &cli.out),
        CommandKind::Verify => commands::verify::run(&cfg, seed, &cli.out),
        CommandKind::Solve => commands::solve::run(&cfg, &cli.out),
    })
}
