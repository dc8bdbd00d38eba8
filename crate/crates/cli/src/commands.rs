//! The four subcommand drivers. Each returns the process exit code; errors
//! carry their own code (2 for configuration problems, 3 for a report that
//! fails its internal consistency checks).

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use treeop::analysis::{
    self, AnalysisReport, MultOperator, OpConfig, RadialOperator,
};
use treeop::expr::{parse, RadialExpr};
use treeop::harness::{
    self, random_symbols, theorem_suite, HarnessError, TheoremSuiteReport, WitnessFamily,
    WitnessKind,
};
use treeop::oracle::{oracle_random_suite, OracleError, RandomSuiteConfig, SuiteReport};
use treeop::space::{
    read_function_csv, read_weight_csv, RadialWeightFn, SpaceError, TreeFunction, Weight,
    WeightPreset,
};
use treeop::tree::{TreeSpec, Truncation};

use crate::config::{
    analysis_options, build_options, ResolvedConfig, SymbolConfig, TreeConfig, WeightConfig,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, unreadable input, or an instance the limits reject.
    Config(String),
    /// A produced report failed its own consistency checks.
    Invariant(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Invariant(m) => write!(f, "internal invariant violated: {m}"),
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<analysis::AnalysisError> for CliError {
    fn from(e: analysis::AnalysisError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Config(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// realizing config pieces

fn tree_spec(cfg: &TreeConfig) -> Result<TreeSpec, CliError> {
    Ok(match cfg {
        TreeConfig::Homogeneous { children, infinite } => {
            let mut spec = TreeSpec::homogeneous(*children);
            spec.declared_infinite = *infinite;
            spec
        }
        TreeConfig::Radial { profile, rest, infinite } => {
            let mut spec = TreeSpec::radial_profile(profile.clone(), *rest);
            spec.declared_infinite = *infinite;
            spec
        }
        TreeConfig::File { path } => load_edge_list(path)?,
    })
}

/// Edge-list file: header `parent,child`, one edge per row, external u64
/// ids; the root is the one id never appearing as a child.
fn load_edge_list(path: &Path) -> Result<TreeSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("could not read {}: {e}", path.display())))?;
    let bad = |line: usize, m: String| {
        Err(CliError::Config(format!("{}:{line}: {m}", path.display())))
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "parent,child" => {}
        Some((_, h)) => return bad(1, format!("expected header parent,child, got {h:?}")),
        None => return bad(1, "empty file".into()),
    }
    let mut edges = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let Some((p, c)) = row.split_once(',') else {
            return bad(line, format!("expected parent,child, got {row:?}"));
        };
        let parse_id = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("{s:?}: {e}"));
        match (parse_id(p), parse_id(c)) {
            (Ok(p), Ok(c)) => edges.push((p, c)),
            (Err(m), _) | (_, Err(m)) => return bad(line, m),
        }
    }
    let mut roots: Vec<u64> = Vec::new();
    for &(p, _) in &edges {
        if !edges.iter().any(|&(_, c)| c == p) && !roots.contains(&p) {
            roots.push(p);
        }
    }
    match roots.as_slice() {
        [root] => Ok(TreeSpec::edge_list(*root, edges)),
        [] => Err(CliError::Config(format!(
            "{}: no root found (every id appears as a child)",
            path.display()
        ))),
        many => Err(CliError::Config(format!(
            "{}: multiple roots {many:?}; the edge list must be connected",
            path.display()
        ))),
    }
}

fn parse_expr(src: &str) -> Result<RadialExpr, CliError> {
    parse(src).map_err(|e| CliError::Config(format!("expression {src:?}: {e}")))
}

fn preset(name: &str, param: Option<f64>) -> Result<WeightPreset, CliError> {
    let need = |what: &str| {
        CliError::Config(format!("weight preset {name:?} needs a {what} param"))
    };
    Ok(match name {
        "constant" => WeightPreset::Constant(param.unwrap_or(1.0)),
        "geometric" => WeightPreset::Geometric(param.ok_or_else(|| need("ratio"))?),
        "reciprocal-depth" => WeightPreset::ReciprocalDepth,
        "iterated-log" => {
            let k = param.unwrap_or(1.0);
            if k.fract() != 0.0 || k < 1.0 {
                return Err(need("positive integer"));
            }
            WeightPreset::IteratedLog(k as u32)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown weight preset {other:?} (constant, geometric, reciprocal-depth, iterated-log)"
            )))
        }
    })
}

/// The weight as a radial rule, when it is one; file weights are not.
fn radial_weight(cfg: &WeightConfig) -> Result<Option<RadialWeightFn>, CliError> {
    Ok(match cfg {
        WeightConfig::Expr(src) => Some(RadialWeightFn::Expr(parse_expr(src)?)),
        WeightConfig::Preset { preset: name, param } => {
            Some(RadialWeightFn::Preset(preset(name, *param)?))
        }
        WeightConfig::File { .. } => None,
    })
}

fn weight_on(tr: &Arc<Truncation>, cfg: &WeightConfig) -> Result<Weight, CliError> {
    match radial_weight(cfg)? {
        Some(rule) => Ok(Weight::radial(tr.clone(), rule)?),
        None => {
            let WeightConfig::File { file } = cfg else { unreachable!() };
            let text = std::fs::read_to_string(file).map_err(|e| {
                CliError::Config(format!("could not read {}: {e}", file.display()))
            })?;
            Ok(read_weight_csv(&text, tr.clone())?)
        }
    }
}

fn radial_symbol(cfg: &SymbolConfig) -> Result<Option<RadialExpr>, CliError> {
    Ok(match cfg {
        SymbolConfig::Expr(src) => Some(parse_expr(src)?),
        SymbolConfig::File { .. } => None,
    })
}

fn symbol_on(tr: &Arc<Truncation>, cfg: &SymbolConfig) -> Result<TreeFunction, CliError> {
    match cfg {
        SymbolConfig::Expr(src) => {
            Ok(TreeFunction::from_expr(tr.clone(), parse_expr(src)?)?)
        }
        SymbolConfig::File { file } => {
            let text = std::fs::read_to_string(file).map_err(|e| {
                CliError::Config(format!("could not read {}: {e}", file.display()))
            })?;
            Ok(read_function_csv(&text, tr.clone())?)
        }
    }
}

fn require_symbol(cfg: &ResolvedConfig) -> Result<&SymbolConfig, CliError> {
    cfg.symbol
        .as_ref()
        .ok_or_else(|| CliError::Config("a symbol is required (config key symbol or --symbol)".into()))
}

fn materialize(cfg: &ResolvedConfig) -> Result<Arc<Truncation>, CliError> {
    let spec = tree_spec(&cfg.tree)?;
    Ok(Arc::new(
        Truncation::build_with(&spec, cfg.depth, &build_options(cfg)).map_err(SpaceError::from)?,
    ))
}

fn build_operator(cfg: &ResolvedConfig) -> Result<MultOperator, CliError> {
    let tr = materialize(cfg)?;
    let mu = weight_on(&tr, &cfg.weight)?;
    let psi = symbol_on(&tr, require_symbol(cfg)?)?;
    Ok(MultOperator::new(psi, mu, cfg.op)?)
}

/// Analyze through the level-by-level radial path when every ingredient is
/// radial, falling back to a materialized truncation otherwise.
fn run_analysis(cfg: &ResolvedConfig) -> Result<AnalysisReport, CliError> {
    let opts = analysis_options(cfg);
    let spec = tree_spec(&cfg.tree)?;
    if spec.is_generator() {
        let sym = radial_symbol(require_symbol(cfg)?)?;
        let wfn = radial_weight(&cfg.weight)?;
        if let (Some(sym), Some(wfn)) = (sym, wfn) {
            let rop = RadialOperator::new(spec, cfg.depth, sym, wfn, cfg.op)?;
            return Ok(analysis::analyze_radial(&rop, &opts)?);
        }
    }
    Ok(analysis::analyze(&build_operator(cfg)?, &opts)?)
}

// ---------------------------------------------------------------------------
// output plumbing

/// Write to the target path through a temp file in the same directory, so a
/// failure never leaves a partial file; no path means stdout.
fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let Some(path) = out else {
        print!("{text}");
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: &dyn fmt::Display| {
        CliError::Config(format!("could not write {}: {e}", path.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(&e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| io_err(&e))?;
    tmp.persist(path).map_err(|e| io_err(&e))?;
    Ok(())
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("reports serialize");
    text.push('\n');
    text
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Serialize)]
struct AnalyzeDoc {
    config: ResolvedConfig,
    report: AnalysisReport,
}

pub fn cmd_analyze(cfg: &ResolvedConfig, out: Option<&Path>) -> Result<i32, CliError> {
    let report = run_analysis(cfg)?;
    report.validate().map_err(CliError::Invariant)?;
    let doc = AnalyzeDoc { config: cfg.clone(), report };
    write_output(out, &to_json(&doc))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// spectrum

pub fn cmd_spectrum(cfg: &ResolvedConfig, out: Option<&Path>) -> Result<i32, CliError> {
    if cfg.op != OpConfig::LmuToLmu {
        return Err(CliError::Config(format!(
            "spectrum is defined for the lmu-to-lmu configuration, not {}",
            cfg.op
        )));
    }
    let report = run_analysis(cfg)?;
    report.validate().map_err(CliError::Invariant)?;
    let sp = report
        .spectrum
        .ok_or_else(|| CliError::Invariant("analysis produced no spectrum".into()))?;
    let mut text = String::from("re,im,count\n");
    for p in &sp.points {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.value.re),
            fmt_f64(p.value.im),
            fmt_f64(p.count)
        ));
    }
    text.push_str("# accumulation\n");
    for c in &sp.accumulation_candidates {
        text.push_str(&format!("{},{}\n", fmt_f64(c.re), fmt_f64(c.im)));
    }
    write_output(out, &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// witness

fn depth_anchors(tr: &Arc<Truncation>, cfg: &ResolvedConfig, depths: &[u32]) -> Result<Vec<u32>, CliError> {
    let mut anchors = Vec::with_capacity(depths.len());
    for &d in depths {
        if d > cfg.depth {
            return Err(CliError::Config(format!(
                "anchor depth {d} is beyond the truncation depth {}",
                cfg.depth
            )));
        }
        if d as usize >= tr.levels() {
            return Err(CliError::Config(format!(
                "anchor depth {d} is beyond the last realized level {}",
                tr.levels() - 1
            )));
        }
        anchors.push(tr.level(d as usize).start);
    }
    Ok(anchors)
}

pub fn cmd_witness(
    cfg: &ResolvedConfig,
    kind: Option<WitnessKind>,
    anchor_depths: Option<&[u32]>,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let op = build_operator(cfg)?;
    let tr = op.truncation().clone();
    let kind = kind.unwrap_or_else(|| harness::kind_for(cfg.op));
    let anchors = match anchor_depths {
        Some(depths) => depth_anchors(&tr, cfg, depths)?,
        None => WitnessFamily::default_anchors(&tr, cfg.depth),
    };
    let family = WitnessFamily::new(tr.clone(), kind, anchors)?;
    let trend = harness::compactness_trend(&op, &family)?;
    let mut text = String::from("n,depth,domain_norm,codomain_norm\n");
    for (i, norm) in trend.norms.iter().enumerate() {
        let member = family.member(i, op.weight())?;
        let domain = match kind {
            WitnessKind::ScaledChar | WitnessKind::TailReciprocal => {
                member.weighted_norm(op.weight())?.value
            }
            WitnessKind::Ramp => member.lipschitz_norm().value,
        };
        text.push_str(&format!(
            "{i},{},{},{}\n",
            tr.depth(family.anchors()[i]),
            fmt_f64(domain),
            fmt_f64(*norm)
        ));
    }
    write_output(out, &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct VerifyDoc {
    config: ResolvedConfig,
    passed: bool,
    oracle: SuiteReport,
    theorem: TheoremSuiteReport,
}

pub fn cmd_verify(
    cfg: &ResolvedConfig,
    out: Option<&Path>,
    inject: bool,
) -> Result<i32, CliError> {
    let fixture_dir: PathBuf = match out.and_then(Path::parent) {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let oracle = oracle_random_suite(&RandomSuiteConfig {
        trials: cfg.trials,
        max_depth: cfg.max_depth,
        max_branching: cfg.max_branching,
        seed: cfg.seed,
        brute_cap: Some(40),
        fixture_dir: Some(fixture_dir.clone()),
        inject_fault: inject,
    })?;

    let tr = materialize(cfg)?;
    let mu = weight_on(&tr, &cfg.weight)?;
    let symbols = match &cfg.suite_symbols {
        None => {
            let mut list = vec![("zero".to_string(), TreeFunction::zero(tr.clone()))];
            list.extend(random_symbols(&tr, 50, cfg.seed));
            list
        }
        Some(list) if list.is_empty() => {
            return Err(CliError::Config("suite_symbols must not be empty".into()))
        }
        Some(list) => list
            .iter()
            .map(|src| {
                Ok((src.clone(), TreeFunction::from_expr(tr.clone(), parse_expr(src)?)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?,
    };
    let configs = [OpConfig::LmuToLmu, OpConfig::LToLmu, OpConfig::LmuToL];
    let theorem = theorem_suite(
        &mu,
        &symbols,
        &configs,
        &analysis_options(cfg),
        cfg.seed,
        Some(&fixture_dir),
    )?;

    let passed = oracle.passed && theorem.passed;
    let doc = VerifyDoc { config: cfg.clone(), passed, oracle, theorem };
    write_output(out, &to_json(&doc))?;
    if let Some(path) = out {
        write_output(Some(&path.with_extension("csv")), &doc.theorem.csv())?;
    }
    if !passed {
        for trial in doc.oracle.trials.iter().filter(|t| !t.passed) {
            if let Some(fixture) = &trial.fixture {
                eprintln!("oracle trial {} failed, fixture {}", trial.index, fixture.display());
            } else {
                eprintln!("oracle trial {} failed", trial.index);
            }
        }
        for row in doc.theorem.rows.iter().filter(|r| !r.passed) {
            match &row.fixture {
                Some(fixture) => eprintln!(
                    "suite row {} {} failed, fixture {}",
                    row.config,
                    row.symbol,
                    fixture.display()
                ),
                None => eprintln!("suite row {} {} failed", row.config, row.symbol),
            }
        }
        return Ok(1);
    }
    Ok(0)
}
