//! Independent evidence for the operator verdicts: witness families whose
//! image norms trace compactness from below, and a suite that crosses every
//! closed-form verdict with the extremal oracle on the same instance.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    self, AnalysisError, AnalysisOptions, MultOperator, NormEstimate, OpConfig, Verdict,
};
use crate::expr::{classify_series, TailClass, TailParams};
use crate::oracle::{self, CheckOutcome};
use crate::space::{SpaceError, TreeFunction, Weight};
use crate::tree::{Truncation, VertexId};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("witness anchors: {0}")]
    BadAnchors(String),
    #[error("{kind:?} witness family does not match the {config} configuration")]
    KindMismatch { kind: WitnessKind, config: OpConfig },
    #[error("inconsistent report: {0}")]
    BadReport(String),
    #[error("could not write fixture {path}")]
    FixtureIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Shape of the unit vectors in a witness family, one per configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// Characteristic function at the anchor, scaled to weighted norm one.
    ScaledChar,
    /// Depth ramp rising to the anchor depth; Lipschitz-type norm 2.
    Ramp,
    /// Reciprocal weight supported past the anchor depth; weighted norm one.
    TailReciprocal,
}

/// The family shape whose image norms witness non-compactness for a config.
pub fn kind_for(config: OpConfig) -> WitnessKind {
    match config {
        OpConfig::LmuToLmu => WitnessKind::ScaledChar,
        OpConfig::LToLmu => WitnessKind::Ramp,
        OpConfig::LmuToL => WitnessKind::TailReciprocal,
    }
}

/// Anchored family of unit-norm test vectors marching down the tree.
#[derive(Debug, Clone)]
pub struct WitnessFamily {
    tr: Arc<Truncation>,
    kind: WitnessKind,
    anchors: Vec<VertexId>,
}

impl WitnessFamily {
    /// Anchors must sit at strictly increasing depths, none above depth 2:
    /// the family invariants (norm exactly 2 for ramps) need room.
    pub fn new(
        tr: Arc<Truncation>,
        kind: WitnessKind,
        anchors: Vec<VertexId>,
    ) -> Result<Self, HarnessError> {
        if anchors.is_empty() {
            return Err(HarnessError::BadAnchors("need at least one anchor".into()));
        }
        let mut prev = None;
        for &a in &anchors {
            if !tr.contains(a) {
                return Err(HarnessError::BadAnchors(format!("vertex {a} not in the truncation")));
            }
            let d = tr.depth(a);
            if d < 2 {
                return Err(HarnessError::BadAnchors(format!(
                    "anchor {a} at depth {d}, below the minimum depth 2"
                )));
            }
            if let Some(p) = prev {
                if d <= p {
                    return Err(HarnessError::BadAnchors(format!(
                        "anchor depths must strictly increase, got {p} then {d}"
                    )));
                }
            }
            prev = Some(d);
        }
        Ok(WitnessFamily { tr, kind, anchors })
    }

    /// First vertex of each realized level at depths `2..=max_depth`.
    pub fn default_anchors(tr: &Truncation, max_depth: u32) -> Vec<VertexId> {
        let last = (tr.levels() - 1) as u32;
        (2..=max_depth.min(last)).map(|d| tr.level(d as usize).start).collect()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn kind(&self) -> WitnessKind {
        self.kind
    }

    pub fn anchors(&self) -> &[VertexId] {
        &self.anchors
    }

    /// Realize member `i`. Members are built on demand; a deep family never
    /// holds more than one realized vector at a time.
    pub fn member(&self, i: usize, mu: &Weight) -> Result<TreeFunction, HarnessError> {
        if mu.truncation() != &self.tr {
            return Err(HarnessError::Space(SpaceError::TreeMismatch));
        }
        let w = self.anchors[i];
        let m = f64::from(self.tr.depth(w));
        let tr = self.tr.clone();
        Ok(match self.kind {
            WitnessKind::ScaledChar => {
                let scale = 1.0 / mu.value(w);
                TreeFunction::from_fn(tr, move |v| {
                    if v == w { Complex64::new(scale, 0.0) } else { Complex64::new(0.0, 0.0) }
                })
            }
            WitnessKind::Ramp => {
                let depths = tr.clone();
                TreeFunction::from_fn(tr, move |v| {
                    let d = f64::from(depths.depth(v));
                    let x = if d < m / 2.0 {
                        0.0
                    } else if d < m {
                        2.0 * d - m
                    } else {
                        m
                    };
                    Complex64::new(x, 0.0)
                })
            }
            WitnessKind::TailReciprocal => {
                let depths = tr.clone();
                let mu = mu.clone();
                TreeFunction::from_fn(tr, move |v| {
                    if f64::from(depths.depth(v)) < m {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(1.0 / mu.value(v), 0.0)
                    }
                })
            }
        })
    }
}

// ---------------------------------------------------------------------------
// compactness trend

/// Tolerance under which a witness image norm counts as vanished.
pub const TREND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrendVerdict {
    ConsistentWithCompact,
    /// Recent image norms all sit at or above the floor.
    BoundedAway { floor: f64 },
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub verdict: TrendVerdict,
    /// Codomain norm of the operator applied to each family member, in
    /// anchor order.
    pub norms: Vec<f64>,
}

fn codomain_norm(op: &MultOperator, f: &TreeFunction) -> Result<f64, SpaceError> {
    match op.config() {
        OpConfig::LmuToLmu | OpConfig::LToLmu => Ok(f.weighted_norm(op.weight())?.value),
        OpConfig::LmuToL => Ok(f.lipschitz_norm().value),
    }
}

/// Push the family through the operator and classify the image norms. A
/// compact operator sends these essentially-disjointly-supported unit
/// vectors to vanishing norms; a floor is direct evidence against that.
pub fn compactness_trend(
    op: &MultOperator,
    family: &WitnessFamily,
) -> Result<TrendReport, HarnessError> {
    let want = kind_for(op.config());
    if family.kind != want {
        return Err(HarnessError::KindMismatch { kind: family.kind, config: op.config() });
    }
    if &family.tr != op.truncation() {
        return Err(HarnessError::Space(SpaceError::TreeMismatch));
    }
    let mut norms = Vec::with_capacity(family.len());
    for i in 0..family.len() {
        let member = family.member(i, op.weight())?;
        let image = analysis::apply(op, &member)?;
        norms.push(codomain_norm(op, &image)?);
    }
    if norms.len() < 3 {
        return Ok(TrendReport { verdict: TrendVerdict::Inconclusive, norms });
    }
    let params = TailParams { window: norms.len().min(5), tol: TREND_TOL, burn_in: 0 };
    let report = classify_series(&norms, &params).expect("window fits the norm series");
    let window_min = report.evidence.map(|e| e.window_min).unwrap_or(0.0);
    let window = &norms[norms.len() - params.window..];
    // a window still strictly declining may yet reach zero deeper down;
    // only a stalled window certifies a floor
    let still_declining = window.windows(2).all(|p| p[1] < p[0]);
    let verdict = match report.class {
        TailClass::TendsToZero => TrendVerdict::ConsistentWithCompact,
        TailClass::TendsToLimit { limit } if limit.abs() <= TREND_TOL => {
            TrendVerdict::ConsistentWithCompact
        }
        TailClass::TendsToLimit { .. } => TrendVerdict::BoundedAway { floor: window_min },
        _ if window_min >= TREND_TOL && !still_declining => {
            TrendVerdict::BoundedAway { floor: window_min }
        }
        _ => TrendVerdict::Inconclusive,
    };
    Ok(TrendReport { verdict, norms })
}

// ---------------------------------------------------------------------------
// theorem suite

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub config: OpConfig,
    pub symbol: String,
    pub passed: bool,
    pub bounded: Verdict,
    pub compact: Verdict,
    /// Sup of the governing pointwise quantity on the truncation.
    pub quantity: f64,
    pub lo: f64,
    pub hi: f64,
    pub oracle: f64,
    pub checks: Vec<CheckOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremSuiteReport {
    pub passed: bool,
    pub rows: Vec<SuiteRow>,
}

impl TheoremSuiteReport {
    /// One line per row; symbol labels have commas flattened.
    pub fn csv(&self) -> String {
        let mut out = String::from("config,symbol,verdict,quantity,lo,hi,oracle\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.config,
                row.symbol.replace(',', ";"),
                row.bounded,
                row.quantity,
                row.lo,
                row.hi,
                row.oracle,
            ));
        }
        out
    }
}

/// Deterministic tabulated symbols for suite padding.
pub fn random_symbols(
    tr: &Arc<Truncation>,
    count: usize,
    seed: u64,
) -> Vec<(String, TreeFunction)> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0x8000_0000_0000_0000 | i as u64);
            (format!("random-{}", i + 1), random_function(tr, &mut rng))
        })
        .collect()
}

fn random_function(tr: &Arc<Truncation>, rng: &mut ChaCha8Rng) -> TreeFunction {
    let vals: Vec<Complex64> = (0..tr.vertex_count())
        .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect();
    TreeFunction::from_values(tr.clone(), vals).expect("random values are finite")
}

/// Trees this small get the exhaustive brute-force cross-check.
const BRUTE_CAP: usize = 40;

fn domain_norm(config: OpConfig, f: &TreeFunction, mu: &Weight) -> Result<f64, SpaceError> {
    match config {
        OpConfig::LmuToLmu | OpConfig::LmuToL => Ok(f.weighted_norm(mu)?.value),
        OpConfig::LToLmu => Ok(f.lipschitz_norm().value),
    }
}

fn sample_vertices(tr: &Truncation, want: usize) -> Vec<VertexId> {
    let n = tr.vertex_count();
    let step = (n / want).max(1);
    (0..n).step_by(step).take(want).map(|v| v as u32).collect()
}

fn bool_check(name: &'static str, ok: bool) -> CheckOutcome {
    CheckOutcome::range(name, 1.0, 1.0, if ok { 1.0 } else { 0.0 })
}

/// Cross every symbol with every configuration: analyze, run the extremal
/// oracle on the same instance, and assert the relations that must hold
/// between the two, plus the witness-family invariants.
pub fn theorem_suite(
    weight: &Weight,
    symbols: &[(String, TreeFunction)],
    configs: &[OpConfig],
    opts: &AnalysisOptions,
    seed: u64,
    fixture_dir: Option<&Path>,
) -> Result<TheoremSuiteReport, HarnessError> {
    let mut rows = Vec::with_capacity(symbols.len() * configs.len());
    let mut passed = true;
    for (si, (label, psi)) in symbols.iter().enumerate() {
        for &config in configs {
            let op = MultOperator::new(psi.clone(), weight.clone(), config)?;
            let row = suite_row(&op, label, si, seed, opts, fixture_dir)?;
            passed &= row.passed;
            rows.push(row);
        }
    }
    Ok(TheoremSuiteReport { passed, rows })
}

fn suite_row(
    op: &MultOperator,
    label: &str,
    symbol_index: usize,
    seed: u64,
    opts: &AnalysisOptions,
    fixture_dir: Option<&Path>,
) -> Result<SuiteRow, HarnessError> {
    let tr = op.truncation().clone();
    let mu = op.weight();
    let psi = op.symbol();
    let config = op.config();
    let report = analysis::analyze(op, opts)?;
    report.validate().map_err(HarnessError::BadReport)?;
    let bounds = analysis::norm_bounds(op, opts)?;
    let cert = match config {
        OpConfig::LmuToLmu => oracle::oracle_norm_lmu_to_lmu(psi, mu)?,
        OpConfig::LToLmu => oracle::oracle_norm_l_to_lmu(psi, mu)?,
        OpConfig::LmuToL => oracle::oracle_norm_lmu_to_l(psi, mu)?,
    };
    let mut checks = Vec::new();

    match report.norm {
        NormEstimate::Exact { value } => {
            checks.push(CheckOutcome::near("norm-matches-oracle", cert.norm_value, 1e-12, value));
        }
        NormEstimate::Interval { lo, hi } => {
            checks.push(CheckOutcome::range(
                "oracle-within-bounds",
                lo - 1e-9,
                hi + 1e-9,
                cert.norm_value,
            ));
        }
    }

    let witness_domain = domain_norm(config, &cert.witness, mu)?;
    checks.push(CheckOutcome::range("certificate-in-ball", 0.0, 1.0 + 1e-12, witness_domain));
    let image = analysis::apply(op, &cert.witness)?;
    checks.push(CheckOutcome::near(
        "certificate-reproduces",
        cert.norm_value,
        1e-9,
        codomain_norm(op, &image)?,
    ));

    if config == OpConfig::LmuToLmu {
        let sp = report.spectrum.as_ref().expect("same-space analysis carries a spectrum");
        let covered = tr.vertices().all(|v| {
            let z = psi.value(v);
            sp.points.iter().any(|p| (p.value - z).norm() <= sp.resolution)
        });
        checks.push(bool_check("spectrum-covers-symbol-values", covered));
        let total: f64 = sp.points.iter().map(|p| p.count).sum();
        checks.push(CheckOutcome::near(
            "spectrum-counts-every-vertex",
            tr.vertex_count() as f64,
            0.0,
            total,
        ));

        let samples = sample_vertices(&tr, 5);
        let eigen_ok = samples
            .iter()
            .map(|&w| analysis::eigen_check(op, w))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .all(|ok| ok);
        checks.push(bool_check("char-fns-are-exact-eigenvectors", eigen_ok));

        let bb = report.bounded_below.as_ref().expect("same-space analysis carries bounded-below");
        let min_point = sp.points.iter().map(|p| p.value.norm()).fold(f64::INFINITY, f64::min);
        checks.push(CheckOutcome::range(
            "spectrum-floor-matches-inf",
            bb.inf_modulus - sp.resolution - 1e-12,
            bb.inf_modulus + sp.resolution + 1e-12,
            min_point,
        ));

        let mut dev = 0.0f64;
        for &w in &samples {
            let chi = TreeFunction::char_fn(tr.clone(), w)?;
            let image = analysis::apply(op, &chi)?;
            let got = image.weighted_norm(mu)?.value;
            let expect = psi.value(w).norm() * chi.weighted_norm(mu)?.value;
            dev = dev.max((got - expect).abs());
        }
        checks.push(CheckOutcome::near("char-image-norm-identity", 0.0, 1e-12, dev));
    }

    // witness family invariants plus the trend, when the tree has the depth
    let anchors = WitnessFamily::default_anchors(&tr, tr.depth_cap());
    if anchors.len() >= 3 {
        let family = WitnessFamily::new(tr.clone(), kind_for(config), anchors)?;
        let expected = match family.kind() {
            WitnessKind::ScaledChar | WitnessKind::TailReciprocal => 1.0,
            WitnessKind::Ramp => 2.0,
        };
        let mut dev = 0.0f64;
        for i in 0..family.len() {
            let member = family.member(i, mu)?;
            dev = dev.max((domain_norm(config, &member, mu)? - expected).abs());
        }
        checks.push(CheckOutcome::near("family-members-are-unit", 0.0, 1e-9, dev));

        let trend = compactness_trend(op, &family)?;
        // every operator on a complete finite tree is compact, so a
        // flooring family says nothing there
        if report.compact == Verdict::Yes && !report.complete_tree {
            checks.push(bool_check(
                "trend-agrees-with-compact",
                !matches!(trend.verdict, TrendVerdict::BoundedAway { .. }),
            ));
        }
        // level-start anchors only see radial data faithfully
        if report.compact == Verdict::No && psi.is_radial() && mu.is_radial() {
            checks.push(bool_check(
                "trend-agrees-with-non-compact",
                !matches!(trend.verdict, TrendVerdict::ConsistentWithCompact),
            ));
        }
    }

    let mut worst_ratio = 0.0f64;
    let mut sub_ok = true;
    for j in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((symbol_index as u64) * 3 + j + 1);
        let f = random_function(&tr, &mut rng);
        let dn = domain_norm(config, &f, mu)?;
        let image_norm = codomain_norm(op, &analysis::apply(op, &f)?)?;
        let bound = bounds.hi * dn;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(image_norm / bound);
        } else {
            sub_ok &= image_norm == 0.0;
        }
    }
    checks.push(CheckOutcome::range(
        "image-norms-within-bound",
        0.0,
        1.0 + 1e-9,
        if sub_ok { worst_ratio } else { 2.0 },
    ));

    if tr.vertex_count() <= BRUTE_CAP {
        let brute = match config {
            OpConfig::LmuToLmu => oracle::brute_norm_lmu_to_lmu(psi, mu)?,
            OpConfig::LToLmu => oracle::brute_norm_l_to_lmu(psi, mu)?,
            OpConfig::LmuToL => oracle::brute_norm_lmu_to_l(psi, mu)?,
        };
        checks.push(CheckOutcome::near("brute-force-agrees", brute, 1e-6, cert.norm_value));
    }

    let passed = checks.iter().all(|c| c.passed);
    let fixture = if !passed {
        fixture_dir.map(|dir| dump_suite_fixture(dir, op, label, &checks)).transpose()?
    } else {
        None
    };

    let quantity = report.bounded.value;
    Ok(SuiteRow {
        config,
        symbol: label.to_string(),
        passed,
        bounded: report.bounded.verdict,
        compact: report.compact,
        quantity,
        lo: bounds.lo,
        hi: bounds.hi,
        oracle: cert.norm_value,
        checks,
        fixture,
    })
}

#[derive(Serialize)]
struct SuiteFixture<'a> {
    config: OpConfig,
    symbol: &'a str,
    root: u64,
    edges: Vec<(u64, u64)>,
    mu: &'a [f64],
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    checks: &'a [CheckOutcome],
}

fn dump_suite_fixture(
    dir: &Path,
    op: &MultOperator,
    label: &str,
    checks: &[CheckOutcome],
) -> Result<PathBuf, HarnessError> {
    let tr = op.truncation();
    let ext = |v: VertexId| tr.external_id(v).unwrap_or(u64::from(v));
    let edges = (1..tr.vertex_count() as u32)
        .map(|v| (ext(tr.parent(v).unwrap().unwrap()), ext(v)))
        .collect();
    let fixture = SuiteFixture {
        config: op.config(),
        symbol: label,
        root: ext(0),
        edges,
        mu: op.weight().values(),
        psi_re: op.symbol().values().iter().map(|z| z.re).collect(),
        psi_im: op.symbol().values().iter().map(|z| z.im).collect(),
        checks,
    };
    let path = dir.join(format!("suite-{}-{}.json", op.config(), label.replace('/', "-")));
    let body = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
    std::fs::write(&path, body)
        .map_err(|source| HarnessError::FixtureIo { path: path.clone(), source })?;
    Ok(path)
}
