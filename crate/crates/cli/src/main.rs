//! `elltau` command-line driver.
//!
//! Exit codes: 0 when every check passes, 1 on a computational failure or
//! a residual above tolerance (partial output is still written), 2 when
//! the configuration is rejected.

mod commands;
mod config;
mod report;
mod verify;

use clap::{Parser, Subcommand};
use commands::{ArmLeg, Only, Options};
use config::RunConfig;
use report::{write_csv, write_json, Document, FlatRow};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "elltau", version, about = "Tau functions on the punctured torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Optional flat CSV table of the records.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Worker threads (falls back to ELLTAU_THREADS, then the config).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomised checks; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Continue past failing grid points.
    #[arg(long, global = true)]
    keep_going: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Determinant and series sides of the one-punctured tau function on a τ-grid.
    TauCm {
        #[arg(long, value_enum)]
        only: Option<Only>,
        /// Arm/leg convention in the series (non-standard values are negative controls).
        #[arg(long, value_enum, default_value_t = ArmLeg::Standard)]
        arm_leg: ArmLeg,
    },
    /// Calogero-Moser trajectory Q, P, H and equation-of-motion residuals.
    SolveQ,
    /// Run the invariant suite.
    Verify {
        /// Restrict to one module: specfun, threept, fredholm, nekrasov, isomon.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, value_enum, default_value_t = ArmLeg::Standard)]
        arm_leg: ArmLeg,
        /// Invert the δν Gamma ratio (negative control).
        #[arg(long)]
        invert_delta_nu: bool,
    },
    /// Garnier series on a τ × cutoff grid.
    Garnier,
    /// Raw summands of the one-punctured series at the first τ.
    NekrasovTable {
        #[arg(long, value_enum, default_value_t = ArmLeg::Standard)]
        arm_leg: ArmLeg,
    },
}

fn emit<R: Serialize + FlatRow>(doc: Document<R>, cli: &Cli) -> anyhow::Result<u8> {
    write_json(&doc, cli.out.as_deref())?;
    if let Some(p) = &cli.csv {
        write_csv(&doc.records, p)?;
    }
    Ok(doc.summary.exit_code())
}

fn thread_count(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<Option<usize>> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    if let Ok(v) = std::env::var("ELLTAU_THREADS") {
        return Ok(Some(v.trim().parse().map_err(|_| anyhow::anyhow!("ELLTAU_THREADS={v} is not a thread count"))?));
    }
    Ok(cfg.threads)
}

fn prepare(cli: &Cli) -> anyhow::Result<(RunConfig, Options)> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = thread_count(cli, &cfg)? {
        if n == 0 {
            anyhow::bail!("thread count must be positive");
        }
        cfg.threads = Some(n);
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut opts = Options { keep_going: cli.keep_going, ..Default::default() };
    match &cli.command {
        Command::TauCm { only, arm_leg } => {
            opts.only = *only;
            opts.arm_leg = *arm_leg;
        }
        Command::Verify { filter, arm_leg, invert_delta_nu } => {
            if let Some(f) = filter {
                if !verify::MODULES.contains(&f.as_str()) {
                    anyhow::bail!("unknown module '{f}' for --filter");
                }
            }
            opts.filter = filter.clone();
            opts.arm_leg = *arm_leg;
            opts.invert_delta_nu = *invert_delta_nu;
        }
        Command::NekrasovTable { arm_leg } => opts.arm_leg = *arm_leg,
        Command::SolveQ | Command::Garnier => {}
    }
    Ok((cfg, opts))
}

fn run(cli: &Cli, cfg: &RunConfig, opts: &Options) -> anyhow::Result<u8> {
    match cli.command {
        Command::TauCm { .. } => emit(commands::tau_cm(cfg, opts)?, cli),
        Command::SolveQ => emit(commands::solve_q(cfg, opts)?, cli),
        Command::Verify { .. } => emit(verify::verify(cfg, opts)?, cli),
        Command::Garnier => emit(commands::garnier(cfg, opts)?, cli),
        Command::NekrasovTable { .. } => emit(commands::nekrasov_table(cfg, opts)?, cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, opts) = match prepare(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("configuration rejected: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg, &opts) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
