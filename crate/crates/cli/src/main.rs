//! `hsclab`: batch driver for curvature scans, threshold searches,
//! certificates and formula checks.
//!
//! Exit status is 0 when the command's check passes, 2 when it ran but the
//! check failed, and 1 on errors.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hsc_core::models::ModelSpec;
use serde::Serialize;

use commands::Outcome;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "hsclab", version, about = "Holomorphic sectional curvature laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for `<command>.json` and `<command>.csv`; JSON goes to
    /// stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Catalog model id, replacing the config's [model] section.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Overrides the command's λ (the upper bracket for lambda0).
    #[arg(long, global = true)]
    lambda: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Metric, curvature and H at given points and directions.
    Eval,
    /// Minimum H over a sample grid; fails unless positive and Kähler.
    Scan,
    /// Bisection for the empirical threshold λ₀.
    Lambda0,
    /// Sufficient λ* from H₀ and C.
    Certify,
    /// Numeric checks of the metric and curvature identities.
    Papercheck,
    /// Sphere average of H against 2S/(N(N+1)).
    Berger,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Scan => "scan",
            Command::Lambda0 => "lambda0",
            Command::Certify => "certify",
            Command::Papercheck => "papercheck",
            Command::Berger => "berger",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = Some(jobs);
    }
    if let Some(id) = &cli.model {
        cfg.model = Some(ModelSpec::catalog(id));
    }
    if let Some(l) = cli.lambda {
        match cli.command {
            Command::Eval => cfg.eval.lambda = l,
            Command::Scan => cfg.scan.lambda = l,
            Command::Lambda0 => cfg.lambda0.lambda_hi = l,
            Command::Papercheck => cfg.papercheck.lambda = l,
            Command::Berger => cfg.berger.lambda = l,
            Command::Certify => anyhow::bail!("certify takes h0 and c, not λ"),
        }
    }
    Ok(cfg)
}

fn finish<T: Serialize>(cli: &Cli, cfg: &RunConfig, out: Outcome<T>) -> Result<bool> {
    let written = report::emit(
        cli.out.as_deref(),
        cli.command.name(),
        cfg.seed,
        &out.report,
        &out.table,
    )?;
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(out.pass)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    if let Some(jobs) = cfg.jobs {
        if jobs == 0 {
            anyhow::bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Eval => finish(cli, &cfg, commands::eval(&cfg)?),
        Command::Scan => {
            let out = commands::scan_cmd(&cfg)?;
            let r = &out.report;
            if !r.kahler_ok {
                eprintln!(
                    "not Kähler: smallest metric eigenvalue {:.6e} at {:?}",
                    r.worst_eigenvalue, r.worst_eigenvalue_at
                );
            }
            finish(cli, &cfg, out)
        }
        Command::Lambda0 => finish(cli, &cfg, commands::lambda0(&cfg)?),
        Command::Certify => finish(cli, &cfg, commands::certify(&cfg)?),
        Command::Papercheck => finish(cli, &cfg, commands::papercheck(&cfg)?),
        Command::Berger => finish(cli, &cfg, commands::berger(&cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: check failed", cli.command.name());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
