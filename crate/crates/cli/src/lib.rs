//! Command-line front end: load tree, weight, and symbol from a JSON config,
//! run the analyses, and emit reports, spectra, witness tables, and
//! verification suites. All outputs are deterministic for a fixed config and
//! seed.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use treeop::analysis::OpConfig;
use treeop::harness::WitnessKind;

use commands::CliError;
use config::{Command, Overrides};

fn parse_op(s: &str) -> Result<OpConfig, String> {
    match s {
        "lmu-to-lmu" => Ok(OpConfig::LmuToLmu),
        "l-to-lmu" => Ok(OpConfig::LToLmu),
        "lmu-to-l" => Ok(OpConfig::LmuToL),
        other => Err(format!(
            "unknown configuration {other:?} (lmu-to-lmu, l-to-lmu, lmu-to-l)"
        )),
    }
}

fn parse_kind(s: &str) -> Result<WitnessKind, String> {
    match s {
        "scaled-char" => Ok(WitnessKind::ScaledChar),
        "ramp" => Ok(WitnessKind::Ramp),
        "tail-reciprocal" => Ok(WitnessKind::TailReciprocal),
        other => Err(format!(
            "unknown witness kind {other:?} (scaled-char, ramp, tail-reciprocal)"
        )),
    }
}

fn parse_depths(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .map_err(|e| CliError::Config(format!("anchor depth {part:?}: {e}")))
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "treeop", version, about = "Multiplication operators on weighted tree spaces")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Truncation depth, overriding the config.
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Comparison tolerance, overriding the config.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// RNG seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Full operator analysis as a JSON report.
    Analyze {
        /// Operator configuration: lmu-to-lmu, l-to-lmu, or lmu-to-l.
        #[arg(long, value_parser = parse_op)]
        op: Option<OpConfig>,
        /// Symbol as a radial expression, overriding the config.
        #[arg(long)]
        symbol: Option<String>,
        /// Spectrum clustering resolution.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Spectrum point cloud as CSV, with accumulation candidates.
    Spectrum {
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Random-instance oracle suite plus the theorem cross-check suite.
    Verify {
        /// Number of random oracle trials.
        #[arg(long)]
        trials: Option<u32>,
        /// Corrupt one value to prove the suite can fail.
        #[arg(long, hide = true)]
        inject_bug: bool,
    },
    /// Witness-family norm table as CSV.
    Witness {
        #[arg(long, value_parser = parse_op)]
        op: Option<OpConfig>,
        #[arg(long)]
        symbol: Option<String>,
        /// Family shape: scaled-char, ramp, or tail-reciprocal; defaults to
        /// the one matching the configuration.
        #[arg(long, value_parser = parse_kind)]
        kind: Option<WitnessKind>,
        /// Comma-separated anchor depths; level starts from depth 2 when
        /// absent.
        #[arg(long)]
        anchors: Option<String>,
    },
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let raw = config::load_raw(cli.config.as_deref())?;
    let mut ov = Overrides {
        depth: cli.depth,
        tol: cli.tol,
        seed: cli.seed,
        ..Overrides::default()
    };
    let out_path = cli.out.or_else(|| raw.out.clone());
    let out = out_path.as_deref();
    match cli.cmd {
        Cmd::Analyze { op, symbol, delta } => {
            ov.op = op;
            ov.symbol = symbol;
            ov.delta = delta;
            let cfg = config::resolve(raw, &ov, Command::Analyze)?;
            commands::cmd_analyze(&cfg, out)
        }
        Cmd::Spectrum { symbol, delta } => {
            ov.symbol = symbol;
            ov.delta = delta;
            let cfg = config::resolve(raw, &ov, Command::Spectrum)?;
            commands::cmd_spectrum(&cfg, out)
        }
        Cmd::Verify { trials, inject_bug } => {
            ov.trials = trials;
            let cfg = config::resolve(raw, &ov, Command::Verify)?;
            commands::cmd_verify(&cfg, out, inject_bug)
        }
        Cmd::Witness { op, symbol, kind, anchors } => {
            ov.op = op;
            ov.symbol = symbol;
            let depths = anchors.as_deref().map(parse_depths).transpose()?;
            let cfg = config::resolve(raw, &ov, Command::Witness)?;
            commands::cmd_witness(&cfg, kind, depths.as_deref(), out)
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
