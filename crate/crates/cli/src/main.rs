//! Batch front end: `systole <subcommand> [--config run.json] [flags]`.
//!
//! Exit status is 0 on success, 2 when a result is inconclusive at the configured
//! precision, and 1 on invalid configuration or any other failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use systole::laws::LawError;
use systole::number_theory::NumberTheoryError;
use systole::surface::SurfaceError;

use commands::Outcome;
use config::RunConfig;
use output::Writer;

#[derive(Parser)]
#[command(
    name = "systole",
    version,
    about = "Systole trajectories, log laws and ergodicity probes for a slit torus"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[arg(long, global = true)]
    unit_area: bool,
    #[arg(long, global = true)]
    k2: Option<f64>,
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Convergent table with good-bound checks.
    Cf,
    /// Surface descriptor.
    Surface,
    /// Systole trajectory on the configured grid.
    Systole,
    /// Log-law ratios, densities, divergence integral and distance bound.
    Laws,
    /// Birkhoff averages of the sheet indicator from several starts.
    Ergodicity,
    /// Dichotomy certificate for a strip complex.
    Certify,
}

fn is_precision(e: &anyhow::Error) -> bool {
    let nt = |n: &NumberTheoryError| {
        matches!(
            n,
            NumberTheoryError::Inconclusive { .. } | NumberTheoryError::PrecisionExhausted { .. }
        )
    };
    e.chain().any(|c| {
        c.downcast_ref::<NumberTheoryError>().is_some_and(nt)
            || matches!(c.downcast_ref::<SurfaceError>(), Some(SurfaceError::NumberTheory(n)) if nt(n))
            || matches!(c.downcast_ref::<LawError>(), Some(LawError::ZeroSystole(_)))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut cfg = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.precision_bits {
        cfg.precision_bits = p;
    }
    if cli.unit_area {
        cfg.unit_area = true;
    }
    if let Some(k) = cli.k2 {
        cfg.k2 = k;
    }
    if let Some(k) = cli.k_max {
        cfg.k_max = k;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("invalid configuration: {e:#}");
        return ExitCode::from(1);
    }
    let run = || -> anyhow::Result<Outcome> {
        let w = Writer::new(&cfg.out, cfg.hash())?;
        match cli.cmd {
            Cmd::Cf => commands::cf(&cfg, &w),
            Cmd::Surface => commands::surface_cmd(&cfg, &w),
            Cmd::Systole => commands::systole_cmd(&cfg, &w),
            Cmd::Laws => commands::laws(&cfg, &w),
            Cmd::Ergodicity => commands::ergodicity(&cfg, &w),
            Cmd::Certify => commands::certify(&cfg, &w),
        }
    };
    match run() {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => {
            eprintln!("inconclusive at {} bits", cfg.precision_bits);
            ExitCode::from(2)
        }
        Err(e) if is_precision(&e) => {
            eprintln!("inconclusive: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
