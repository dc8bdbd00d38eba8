//! Run configuration: a JSON file merged with command-line overrides, then
//! resolved against per-command defaults. Reports embed the resolved form so
//! a run can be reproduced from its own output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use treeop::analysis::{AnalysisOptions, DeclaredTail, OpConfig};
use treeop::expr::TailParams;
use treeop::tree::BuildOptions;

use crate::commands::CliError;

/// How the tree is described: generated by a branching rule or read from an
/// edge-list file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TreeConfig {
    Homogeneous {
        children: u32,
        #[serde(default = "default_true")]
        infinite: bool,
    },
    Radial {
        profile: Vec<u32>,
        rest: u32,
        #[serde(default = "default_true")]
        infinite: bool,
    },
    File { path: PathBuf },
}

fn default_true() -> bool {
    true
}

/// Weight: a radial expression string, a named preset, or a per-vertex file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightConfig {
    Expr(String),
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        param: Option<f64>,
    },
    File { file: PathBuf },
}

/// Symbol: a radial expression string or a per-vertex file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolConfig {
    Expr(String),
    File { file: PathBuf },
}

/// The configuration file as written: everything optional, defaults applied
/// at resolution time.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub tree: Option<TreeConfig>,
    pub weight: Option<WeightConfig>,
    pub symbol: Option<SymbolConfig>,
    pub op: Option<OpConfig>,
    pub depth: Option<u32>,
    pub tol: Option<f64>,
    pub delta: Option<f64>,
    pub window: Option<usize>,
    pub tail_tol: Option<f64>,
    pub burn_in: Option<usize>,
    pub classify_depth: Option<u32>,
    pub seed: Option<u64>,
    pub max_vertices: Option<usize>,
    pub trials: Option<u32>,
    pub max_depth: Option<u32>,
    pub max_branching: Option<u32>,
    pub declared_tail: Option<DeclaredTail>,
    pub suite_symbols: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

/// Command-line overrides; they win over the file, which wins over defaults.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub depth: Option<u32>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub op: Option<OpConfig>,
    pub symbol: Option<String>,
    pub trials: Option<u32>,
}

/// Which subcommand is resolving, for per-command defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Spectrum,
    Verify,
    Witness,
}

/// Fully resolved configuration, embedded verbatim in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub tree: TreeConfig,
    pub weight: WeightConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolConfig>,
    pub op: OpConfig,
    pub depth: u32,
    pub tol: f64,
    pub delta: f64,
    pub window: usize,
    pub tail_tol: f64,
    pub burn_in: usize,
    pub classify_depth: u32,
    pub seed: u64,
    pub max_vertices: usize,
    pub trials: u32,
    pub max_depth: u32,
    pub max_branching: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared_tail: Option<DeclaredTail>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite_symbols: Option<Vec<String>>,
}

pub fn load_raw(path: Option<&Path>) -> Result<RawConfig, CliError> {
    let Some(path) = path else { return Ok(RawConfig::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("could not read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn resolve(
    raw: RawConfig,
    ov: &Overrides,
    cmd: Command,
) -> Result<ResolvedConfig, CliError> {
    let depth = ov
        .depth
        .or(raw.depth)
        .unwrap_or(if cmd == Command::Verify { 5 } else { 20 });
    let weight = raw.weight.unwrap_or_else(|| {
        if cmd == Command::Verify {
            WeightConfig::Preset { preset: "geometric".into(), param: Some(0.5) }
        } else {
            WeightConfig::Preset { preset: "constant".into(), param: None }
        }
    });
    let symbol = match &ov.symbol {
        Some(expr) => Some(SymbolConfig::Expr(expr.clone())),
        None => raw.symbol,
    };
    let cfg = ResolvedConfig {
        tree: raw.tree.unwrap_or(TreeConfig::Homogeneous { children: 2, infinite: true }),
        weight,
        symbol,
        op: ov.op.or(raw.op).unwrap_or(OpConfig::LmuToLmu),
        depth,
        tol: ov.tol.or(raw.tol).unwrap_or(1e-9),
        delta: ov.delta.or(raw.delta).unwrap_or(1e-9),
        window: raw.window.unwrap_or_else(|| 20.min(depth as usize).max(3)),
        tail_tol: raw.tail_tol.unwrap_or(1e-2),
        burn_in: raw.burn_in.unwrap_or(5),
        classify_depth: raw.classify_depth.unwrap_or(200),
        seed: ov.seed.or(raw.seed).unwrap_or(42),
        max_vertices: raw.max_vertices.unwrap_or(4_000_000),
        trials: ov.trials.or(raw.trials).unwrap_or(100),
        max_depth: raw.max_depth.unwrap_or(5),
        max_branching: raw.max_branching.unwrap_or(3),
        declared_tail: raw.declared_tail,
        suite_symbols: raw.suite_symbols,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ResolvedConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    if (cfg.depth as usize) < cfg.window {
        return bad(format!(
            "depth {} is below the classification window {}",
            cfg.depth, cfg.window
        ));
    }
    for (name, v) in [("tol", cfg.tol), ("delta", cfg.delta), ("tail_tol", cfg.tail_tol)] {
        if !(v.is_finite() && v > 0.0) {
            return bad(format!("{name} must be positive and finite, got {v}"));
        }
    }
    if let TreeConfig::Radial { rest, infinite, .. } = &cfg.tree {
        if *infinite && *rest == 0 {
            // the builder rejects this too; catch it at config level for a
            // message that names the field
            return bad("a radial profile declared infinite needs rest > 0".into());
        }
    }
    Ok(())
}

pub fn analysis_options(cfg: &ResolvedConfig) -> AnalysisOptions {
    AnalysisOptions {
        cmp_tol: cfg.tol,
        iso_tol: cfg.tol,
        delta: cfg.delta,
        tail: TailParams { window: cfg.window, tol: cfg.tail_tol, burn_in: cfg.burn_in },
        classify_depth: cfg.classify_depth,
        declared_tail: cfg.declared_tail,
    }
}

pub fn build_options(cfg: &ResolvedConfig) -> BuildOptions {
    BuildOptions { max_vertices: cfg.max_vertices, ..BuildOptions::default() }
}
