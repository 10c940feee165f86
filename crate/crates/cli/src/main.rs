//! Command-line driver: solves the stationary mean-field game described by a
//! config file, samples closed-form solution families, verifies candidate
//! solutions, compares solver output against the closed forms, and audits
//! the objective gradient against finite differences.

use anyhow::Result;
use clap::{Parser, Subcommand};
use mfg_cli::commands::{self, Ctx};
use mfg_cli::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mfg",
    about = "Stationary first-order mean-field games with mixed boundary conditions: solve, verify, compare",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Problem configuration (TOML; JSON accepted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV fields and JSON reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Grid override: cells per axis, e.g. `200` or `48,48`.
    #[arg(long, global = true)]
    n: Option<String>,

    /// Enforce verification thresholds (exit 3 on failure).
    #[arg(long, global = true)]
    strict: bool,

    /// Run even when assumption validation produced findings.
    #[arg(long, global = true)]
    force: bool,

    /// Seed for randomized audits.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the variational objective and write u, m, flux, and reports.
    Solve,
    /// Sample the configured closed-form solution family.
    Oracle,
    /// Run the weak-solution diagnostics on oracle fields or a previous solve.
    Verify,
    /// Solve and compare against the configured closed-form family.
    Compare,
    /// Audit the objective gradient against central finite differences.
    Gradcheck,
}

fn parse_n(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("invalid --n value `{part}`"))
        })
        .collect()
}

fn run(cli: Cli) -> Result<i32> {
    let Some(config_path) = &cli.config else {
        eprintln!("--config is required");
        return Ok(1);
    };
    let cfg = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return Ok(1);
        }
    };
    let n_override = match &cli.n {
        Some(raw) => Some(parse_n(raw)?),
        None => None,
    };
    let ctx = Ctx {
        out: cli.out.clone(),
        n_override,
        strict: cli.strict,
        force: cli.force,
        seed: cli.seed,
    };
    let code = match cli.command {
        Command::Solve => commands::cmd_solve(&cfg, &ctx)?,
        Command::Oracle => commands::cmd_oracle(&cfg, &ctx)?,
        Command::Verify => commands::cmd_verify(&cfg, &ctx)?,
        Command::Compare => commands::cmd_compare(&cfg, &ctx)?,
        Command::Gradcheck => commands::cmd_gradcheck(&cfg, &ctx)?,
    };
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
