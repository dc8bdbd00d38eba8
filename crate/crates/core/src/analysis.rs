//! Verdicts for pointwise multipliers acting within and between the weighted
//! sup-norm space and the Lipschitz-type space: boundedness, norm or norm
//! bounds, compactness, spectrum approximation, bounded-below and isometry.
//!
//! Every quantity is computed exactly on a finite truncation. What lies past
//! the truncation enters only through a classification of the governing level
//! series, continued by the radial rules when the data admits them, and every
//! such verdict is three-valued.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{
    classify_series, EvalError, Provenance, RadialExpr, TailClass, TailParams, TailReport,
};
use crate::space::{
    FnSource, NormValue, RadialWeightFn, SpaceError, TreeFunction, Weight, WeightSource,
};
use crate::tree::{BuildOptions, TreeSpec, Truncation, VertexId};

/// Which pair of spaces the multiplier acts between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpConfig {
    /// Weighted sup-norm space to itself.
    LmuToLmu,
    /// Lipschitz-type space into the weighted sup-norm space.
    LToLmu,
    /// Weighted sup-norm space into the Lipschitz-type space.
    LmuToL,
}

impl fmt::Display for OpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpConfig::LmuToLmu => "lmu-to-lmu",
            OpConfig::LToLmu => "l-to-lmu",
            OpConfig::LmuToL => "lmu-to-l",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{operation} requires a {required} operator, got {got}")]
    WrongConfig { operation: &'static str, required: &'static str, got: OpConfig },
    #[error("radial analysis requires a generator tree spec")]
    NotGenerator,
    #[error("bad analysis parameter: {0}")]
    BadParam(String),
}

/// Asserted tail behavior of the symbol along any branch, for data whose
/// continuation the caller knows but the truncation cannot show.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeclaredTail {
    Zero,
    Limit { value: Complex64 },
    Bounded,
    Unbounded,
}

impl DeclaredTail {
    fn series_report(self) -> TailReport {
        TailReport::declared(match self {
            DeclaredTail::Zero => TailClass::TendsToZero,
            DeclaredTail::Limit { value } => TailClass::TendsToLimit { limit: value.norm() },
            DeclaredTail::Bounded => TailClass::Bounded,
            DeclaredTail::Unbounded => TailClass::Unbounded,
        })
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Tolerance for the exact equalities a would-be isometry forces.
    pub cmp_tol: f64,
    /// Allowed deviation of the symbol modulus from 1 on the truncation.
    pub iso_tol: f64,
    /// Spectrum clustering resolution.
    pub delta: f64,
    /// Level-series classification parameters.
    pub tail: TailParams,
    /// Depth the radial rules are continued to before classification.
    pub classify_depth: u32,
    /// Caller-asserted symbol tail; honored wherever the series in question
    /// is a direct readout of the symbol, ignored for the cross-config
    /// governing series whose depth and weight factors change the limit.
    pub declared_tail: Option<DeclaredTail>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            cmp_tol: 1e-9,
            iso_tol: 1e-9,
            delta: 1e-9,
            // coarser than the expr-level default: level series settle slowly
            tail: TailParams { window: 20, tol: 1e-2, burn_in: 5 },
            classify_depth: 200,
            declared_tail: None,
        }
    }
}

/// Multiplier on a materialized truncation: symbol and weight share the tree.
#[derive(Debug, Clone)]
pub struct MultOperator {
    symbol: TreeFunction,
    weight: Weight,
    config: OpConfig,
}

impl MultOperator {
    pub fn new(
        symbol: TreeFunction,
        weight: Weight,
        config: OpConfig,
    ) -> Result<Self, AnalysisError> {
        if symbol.truncation() != weight.truncation() {
            return Err(SpaceError::TreeMismatch.into());
        }
        Ok(MultOperator { symbol, weight, config })
    }

    pub fn symbol(&self) -> &TreeFunction {
        &self.symbol
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn config(&self) -> OpConfig {
        self.config
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        self.symbol.truncation()
    }

    /// The pointwise quantity whose sup governs boundedness for this config.
    fn pointwise_basis(&self, v: VertexId) -> f64 {
        let m = self.symbol.value(v).norm();
        match self.config {
            OpConfig::LmuToLmu => m,
            OpConfig::LToLmu => {
                self.weight.value(v) * f64::from(self.truncation().depth(v)) * m
            }
            OpConfig::LmuToL => m / self.weight.value(v),
        }
    }
}

/// Multiplier given by radial rules alone; analyzable level by level without
/// materializing the tree.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    spec: TreeSpec,
    depth_cap: u32,
    symbol: RadialExpr,
    weight: RadialWeightFn,
    config: OpConfig,
}

impl RadialOperator {
    pub fn new(
        spec: TreeSpec,
        depth_cap: u32,
        symbol: RadialExpr,
        weight: RadialWeightFn,
        config: OpConfig,
    ) -> Result<Self, AnalysisError> {
        if !spec.is_generator() {
            return Err(AnalysisError::NotGenerator);
        }
        Ok(RadialOperator { spec, depth_cap, symbol, weight, config })
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    pub fn config(&self) -> OpConfig {
        self.config
    }

    /// Realize the truncation and tabulate symbol and weight on it.
    pub fn materialize(&self, opts: &BuildOptions) -> Result<MultOperator, AnalysisError> {
        let tr = Arc::new(
            Truncation::build_with(&self.spec, self.depth_cap, opts).map_err(SpaceError::from)?,
        );
        let symbol = TreeFunction::from_expr(tr.clone(), self.symbol.clone())?;
        let weight = Weight::radial(tr.clone(), self.weight.clone())?;
        MultOperator::new(symbol, weight, self.config)
    }
}

// ---------------------------------------------------------------------------
// report types

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisMode {
    Materialized,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisQuantity {
    SupModulus,
    DepthWeightedSup,
    RatioSup,
}

fn basis_of(config: OpConfig) -> BasisQuantity {
    match config {
        OpConfig::LmuToLmu => BasisQuantity::SupModulus,
        OpConfig::LToLmu => BasisQuantity::DepthWeightedSup,
        OpConfig::LmuToL => BasisQuantity::RatioSup,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub verdict: Verdict,
    pub basis: BasisQuantity,
    /// Sup of the basis quantity over the truncation.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormEstimate {
    Exact { value: f64 },
    Interval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormInterval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WitnessRef {
    /// External id when the tree came from an edge list, BFS id otherwise;
    /// absent when the id overflows u64 in radial mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedBelowReport {
    pub verdict: Verdict,
    /// Min of the symbol modulus over the truncation.
    pub inf_modulus: f64,
    pub witness: Option<WitnessRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IsometryReport {
    /// Same-space case: decided by how far the symbol modulus sits from 1.
    Modulus { verdict: Verdict, max_violation: f64, witness: Option<WitnessRef> },
    /// Cross-space case: the forced-equality chain and its contradiction.
    Cross(CrossIsometryRecord),
}

/// One forced equality in a cross-config isometry chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainStep {
    pub name: &'static str,
    pub depth: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_id: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Per-level values of the governing series a held chain forces to grow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceSeries {
    pub start_depth: u32,
    pub values: Vec<f64>,
}

/// Norm of the rephased reciprocal-weight image, two ways: the root term plus
/// differences over edges strictly inside the punctured tree, against the
/// full Lipschitz norm that also counts the edges meeting depth one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReciprocalGap {
    pub chain_value: f64,
    pub full_lipschitz: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossIsometryRecord {
    pub verdict: Verdict,
    pub steps: Vec<ChainStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reciprocal_gap: Option<ReciprocalGap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub value: Complex64,
    /// f64: level populations overflow every integer type long before f64.
    pub count: f64,
    pub witness_depth: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumApprox {
    pub resolution: f64,
    /// True when the listed points and candidates exhaust the closure.
    pub closure_complete: bool,
    pub points: Vec<SpectrumPoint>,
    pub accumulation_candidates: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub mode: AnalysisMode,
    pub config: OpConfig,
    pub depth_cap: u32,
    pub levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_count: Option<u64>,
    pub complete_tree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailReport>,
    pub bounded: BoundednessReport,
    pub norm: NormEstimate,
    pub compact: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounded_below: Option<BoundedBelowReport>,
    pub isometry: IsometryReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumApprox>,
}

impl AnalysisReport {
    /// Internal consistency of the published numbers.
    pub fn validate(&self) -> Result<(), String> {
        fn nonneg(name: &str, x: f64) -> Result<(), String> {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be finite and nonnegative, got {x}"))
            }
        }
        nonneg("bounded.value", self.bounded.value)?;
        match self.norm {
            NormEstimate::Exact { value } => nonneg("norm", value)?,
            NormEstimate::Interval { lo, hi } => {
                nonneg("norm.lo", lo)?;
                nonneg("norm.hi", hi)?;
                if lo > hi {
                    return Err(format!("norm interval inverted: {lo} > {hi}"));
                }
            }
        }
        if let Some(bb) = &self.bounded_below {
            nonneg("bounded_below.inf_modulus", bb.inf_modulus)?;
        }
        if let IsometryReport::Modulus { max_violation, .. } = &self.isometry {
            nonneg("isometry.max_violation", *max_violation)?;
        }
        if let Some(sp) = &self.spectrum {
            if !(sp.resolution > 0.0) {
                return Err(format!("spectrum resolution must be positive, got {}", sp.resolution));
            }
            for p in &sp.points {
                if !(p.count >= 1.0) {
                    return Err(format!("spectrum point with count {}", p.count));
                }
                if !p.value.re.is_finite() || !p.value.im.is_finite() {
                    return Err("nonfinite spectrum point".into());
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// shared machinery

fn check_opts(opts: &AnalysisOptions) -> Result<(), AnalysisError> {
    let bad = |m: &str| Err(AnalysisError::BadParam(m.to_string()));
    if !(opts.delta.is_finite() && opts.delta > 0.0) {
        return bad("spectrum resolution must be positive and finite");
    }
    if !(opts.cmp_tol.is_finite() && opts.cmp_tol >= 0.0) {
        return bad("comparison tolerance must be nonnegative and finite");
    }
    if !(opts.iso_tol.is_finite() && opts.iso_tol >= 0.0) {
        return bad("isometry tolerance must be nonnegative and finite");
    }
    if !(opts.tail.tol.is_finite() && opts.tail.tol > 0.0) {
        return bad("tail tolerance must be positive and finite");
    }
    Ok(())
}

fn require_config(
    op: &MultOperator,
    want: OpConfig,
    required: &'static str,
    operation: &'static str,
) -> Result<(), AnalysisError> {
    if op.config() == want {
        Ok(())
    } else {
        Err(AnalysisError::WrongConfig { operation, required, got: op.config() })
    }
}

/// Classify with window and burn-in clamped into the realized length; a
/// series too short to hold any window stays inconclusive.
fn classify_clamped(series: &[f64], params: &TailParams) -> TailReport {
    let len = series.len();
    if len < 3 {
        return TailReport {
            class: TailClass::Inconclusive,
            provenance: Provenance::Observed { levels: len },
            evidence: None,
        };
    }
    let window = params.window.clamp(3, len);
    let burn_in = params.burn_in.min(len - window);
    classify_series(series, &TailParams { window, tol: params.tol, burn_in })
        .expect("clamped window fits the series")
}

fn vertex_argmax(tr: &Truncation, f: impl Fn(VertexId) -> f64) -> (VertexId, f64) {
    let mut best = (0u32, f(0));
    for v in 1..tr.vertex_count() as u32 {
        let x = f(v);
        if x > best.1 {
            best = (v, x);
        }
    }
    best
}

fn vertex_argmin(tr: &Truncation, f: impl Fn(VertexId) -> f64) -> (VertexId, f64) {
    let mut best = (0u32, f(0));
    for v in 1..tr.vertex_count() as u32 {
        let x = f(v);
        if x < best.1 {
            best = (v, x);
        }
    }
    best
}

fn witness_ref(tr: &Truncation, v: VertexId) -> WitnessRef {
    WitnessRef { id: Some(tr.external_id(v).unwrap_or(u64::from(v))), depth: tr.depth(v) }
}

/// Per-level maxima of the governing pointwise quantity over the truncation.
fn level_series(op: &MultOperator) -> Vec<f64> {
    let tr = op.truncation();
    let mut out = vec![0.0f64; tr.levels()];
    for v in tr.vertices() {
        let d = tr.depth(v) as usize;
        out[d] = out[d].max(op.pointwise_basis(v));
    }
    out
}

/// Radial rules backing the operator data, when the tree is a declared
/// infinite generator and the sources involved are radial.
struct RadialRules<'a> {
    expr: &'a RadialExpr,
    weight: Option<&'a RadialWeightFn>,
}

fn radial_rules(op: &MultOperator) -> Option<RadialRules<'_>> {
    let spec = op.truncation().spec();
    if !spec.is_generator() || !spec.declared_infinite {
        return None;
    }
    let FnSource::Radial(expr) = op.symbol().source() else { return None };
    let weight = match op.config() {
        OpConfig::LmuToLmu => None,
        OpConfig::LToLmu | OpConfig::LmuToL => match op.weight().source() {
            WeightSource::Radial(rule) => Some(rule),
            WeightSource::Tabulated => return None,
        },
    };
    Some(RadialRules { expr, weight })
}

/// Governing level series continued to `cap` by the radial rules; None when
/// any level fails to evaluate.
fn extended_level_series(rules: &RadialRules<'_>, config: OpConfig, cap: u32) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(cap as usize + 1);
    for n in 0..=cap {
        let m = rules.expr.eval(n).ok()?.norm();
        let q = match config {
            OpConfig::LmuToLmu => m,
            OpConfig::LToLmu => rules.weight?.value(n).ok()? * f64::from(n) * m,
            OpConfig::LmuToL => m / rules.weight?.value(n).ok()?,
        };
        out.push(q);
    }
    Some(out)
}

/// Tail classification of the governing series; None when the truncation
/// covers the whole tree and there is no tail to speak of.
fn governing_tail(op: &MultOperator, opts: &AnalysisOptions) -> Option<TailReport> {
    if op.truncation().covers_spec() {
        return None;
    }
    // a declared symbol tail transfers to the governing series only when the
    // series is the symbol modulus itself
    if op.config() == OpConfig::LmuToLmu {
        if let Some(d) = opts.declared_tail {
            return Some(d.series_report());
        }
    }
    let series = level_series(op);
    let last_depth = (series.len() - 1) as u32;
    if let Some(rules) = radial_rules(op) {
        if opts.classify_depth > last_depth {
            if let Some(ext) = extended_level_series(&rules, op.config(), opts.classify_depth) {
                return Some(classify_clamped(&ext, &opts.tail));
            }
        }
    }
    Some(classify_clamped(&series, &opts.tail))
}

fn bounded_verdict(tail: Option<&TailReport>) -> Verdict {
    match tail {
        None => Verdict::Yes,
        Some(t) => match t.class {
            TailClass::Unbounded => Verdict::No,
            TailClass::Inconclusive => Verdict::Inconclusive,
            _ => Verdict::Yes,
        },
    }
}

fn compact_verdict(tail: Option<&TailReport>, tol: f64) -> Verdict {
    let Some(t) = tail else {
        // the whole tree is realized: finite rank
        return Verdict::Yes;
    };
    match t.class {
        TailClass::TendsToZero => Verdict::Yes,
        TailClass::TendsToLimit { limit } => {
            if limit.abs() <= tol {
                Verdict::Yes
            } else {
                Verdict::No
            }
        }
        TailClass::Unbounded => Verdict::No,
        TailClass::Bounded => match t.evidence {
            Some(e) if e.window_min >= tol => Verdict::No,
            _ => Verdict::Inconclusive,
        },
        TailClass::Inconclusive => Verdict::Inconclusive,
    }
}

// ---------------------------------------------------------------------------
// operator-level quantities

/// Pointwise product of the symbol with `f`, on the shared tree.
pub fn apply(op: &MultOperator, f: &TreeFunction) -> Result<TreeFunction, AnalysisError> {
    if op.truncation() != f.truncation() {
        return Err(SpaceError::TreeMismatch.into());
    }
    let tr = op.truncation().clone();
    Ok(TreeFunction::from_fn(tr, |v| op.symbol().value(v) * f.value(v)))
}

/// Sup of the symbol modulus: the exact operator norm in the same-space case.
pub fn sup_modulus(op: &MultOperator, opts: &AnalysisOptions) -> Result<NormValue, AnalysisError> {
    require_config(op, OpConfig::LmuToLmu, "lmu-to-lmu", "sup-modulus")?;
    check_opts(opts)?;
    let value = level_series(op).into_iter().fold(0.0f64, f64::max);
    Ok(NormValue { value, exact_on_truncation: true, tail_note: governing_tail(op, opts) })
}

/// Sup of weight times depth times symbol modulus, the quantity governing
/// boundedness out of the Lipschitz-type space.
pub fn depth_weighted_sup(
    op: &MultOperator,
    opts: &AnalysisOptions,
) -> Result<NormValue, AnalysisError> {
    require_config(op, OpConfig::LToLmu, "l-to-lmu", "depth-weighted-sup")?;
    check_opts(opts)?;
    let value = level_series(op).into_iter().fold(0.0f64, f64::max);
    Ok(NormValue { value, exact_on_truncation: true, tail_note: governing_tail(op, opts) })
}

/// Sup of symbol modulus over weight, the quantity governing boundedness into
/// the Lipschitz-type space.
pub fn ratio_sup(op: &MultOperator, opts: &AnalysisOptions) -> Result<NormValue, AnalysisError> {
    require_config(op, OpConfig::LmuToL, "lmu-to-l", "ratio-sup")?;
    check_opts(opts)?;
    let value = level_series(op).into_iter().fold(0.0f64, f64::max);
    Ok(NormValue { value, exact_on_truncation: true, tail_note: governing_tail(op, opts) })
}

fn norm_estimate(op: &MultOperator, basis_value: f64) -> NormEstimate {
    match op.config() {
        OpConfig::LmuToLmu => NormEstimate::Exact { value: basis_value },
        OpConfig::LToLmu => {
            let root = op.weight().value(0) * op.symbol().value(0).norm();
            NormEstimate::Interval {
                lo: (0.5 * root).max(basis_value),
                hi: root.max(basis_value),
            }
        }
        OpConfig::LmuToL => {
            NormEstimate::Interval { lo: basis_value, hi: 3.0 * basis_value }
        }
    }
}

/// Norm interval for any config; exact configs collapse to a point.
pub fn norm_bounds(op: &MultOperator, opts: &AnalysisOptions) -> Result<NormInterval, AnalysisError> {
    check_opts(opts)?;
    let basis_value = level_series(op).into_iter().fold(0.0f64, f64::max);
    Ok(match norm_estimate(op, basis_value) {
        NormEstimate::Exact { value } => NormInterval { lo: value, hi: value },
        NormEstimate::Interval { lo, hi } => NormInterval { lo, hi },
    })
}

pub fn is_bounded(op: &MultOperator, opts: &AnalysisOptions) -> Result<Verdict, AnalysisError> {
    check_opts(opts)?;
    Ok(bounded_verdict(governing_tail(op, opts).as_ref()))
}

/// Compact for every config exactly when the governing series tends to zero.
pub fn is_compact(op: &MultOperator, opts: &AnalysisOptions) -> Result<Verdict, AnalysisError> {
    check_opts(opts)?;
    Ok(compact_verdict(governing_tail(op, opts).as_ref(), opts.tail.tol))
}

/// Symbol-modulus level minima, the series governing bounded-below.
fn min_modulus_series(op: &MultOperator) -> Vec<f64> {
    let tr = op.truncation();
    let mut out = vec![f64::INFINITY; tr.levels()];
    for v in tr.vertices() {
        let d = tr.depth(v) as usize;
        out[d] = out[d].min(op.symbol().value(v).norm());
    }
    out
}

fn bounded_below_from_tail(inf: f64, tail: &TailReport, tol: f64) -> Verdict {
    match tail.class {
        TailClass::TendsToZero => Verdict::No,
        TailClass::TendsToLimit { limit } if limit.abs() <= tol => Verdict::No,
        TailClass::Inconclusive => Verdict::Inconclusive,
        _ => {
            debug_assert!(inf > 0.0);
            Verdict::Yes
        }
    }
}

pub fn bounded_below(
    op: &MultOperator,
    opts: &AnalysisOptions,
) -> Result<BoundedBelowReport, AnalysisError> {
    require_config(op, OpConfig::LmuToLmu, "lmu-to-lmu", "bounded-below")?;
    check_opts(opts)?;
    let tr = op.truncation();
    let (v, inf) = vertex_argmin(tr, |v| op.symbol().value(v).norm());
    let witness = Some(witness_ref(tr, v));
    if inf == 0.0 {
        return Ok(BoundedBelowReport { verdict: Verdict::No, inf_modulus: inf, witness });
    }
    if tr.covers_spec() {
        return Ok(BoundedBelowReport { verdict: Verdict::Yes, inf_modulus: inf, witness });
    }
    let tail = if let Some(d) = opts.declared_tail {
        d.series_report()
    } else if let Some(rules) = radial_rules_modulus(op) {
        match extended_level_series(&rules, OpConfig::LmuToLmu, opts.classify_depth) {
            Some(ext) => classify_clamped(&ext, &opts.tail),
            None => classify_clamped(&min_modulus_series(op), &opts.tail),
        }
    } else {
        classify_clamped(&min_modulus_series(op), &opts.tail)
    };
    let verdict = bounded_below_from_tail(inf, &tail, opts.tail.tol);
    Ok(BoundedBelowReport { verdict, inf_modulus: inf, witness })
}

/// Like `radial_rules` but for readouts of the symbol alone, where the
/// weight's source does not matter.
fn radial_rules_modulus(op: &MultOperator) -> Option<RadialRules<'_>> {
    let spec = op.truncation().spec();
    if !spec.is_generator() || !spec.declared_infinite {
        return None;
    }
    let FnSource::Radial(expr) = op.symbol().source() else { return None };
    Some(RadialRules { expr, weight: None })
}

fn modulus_tail_isometry_verdict(tail: &TailReport, tol: f64) -> Verdict {
    match tail.class {
        TailClass::TendsToLimit { limit } => {
            if (limit - 1.0).abs() <= tol {
                Verdict::Yes
            } else {
                Verdict::No
            }
        }
        TailClass::TendsToZero | TailClass::Unbounded => Verdict::No,
        TailClass::Bounded | TailClass::Inconclusive => Verdict::Inconclusive,
    }
}

/// Same-space isometry verdict, or the cross-config contradiction record.
pub fn is_isometry(op: &MultOperator, opts: &AnalysisOptions) -> Result<IsometryReport, AnalysisError> {
    check_opts(opts)?;
    match op.config() {
        OpConfig::LmuToLmu => Ok(modulus_isometry(op, opts)),
        OpConfig::LToLmu | OpConfig::LmuToL => {
            Ok(IsometryReport::Cross(cross_isometry_record(op, opts)?))
        }
    }
}

fn modulus_isometry(op: &MultOperator, opts: &AnalysisOptions) -> IsometryReport {
    let tr = op.truncation();
    let (v, max_violation) = vertex_argmax(tr, |v| (op.symbol().value(v).norm() - 1.0).abs());
    if max_violation > opts.iso_tol {
        return IsometryReport::Modulus {
            verdict: Verdict::No,
            max_violation,
            witness: Some(witness_ref(tr, v)),
        };
    }
    if tr.covers_spec() {
        return IsometryReport::Modulus { verdict: Verdict::Yes, max_violation, witness: None };
    }
    // unimodularity past the truncation needs a declaration or radial rules;
    // a trend in tabulated data cannot certify an exact property
    let verdict = if let Some(d) = opts.declared_tail {
        modulus_tail_isometry_verdict(&d.series_report(), opts.tail.tol)
    } else if let Some(rules) = radial_rules_modulus(op) {
        match extended_level_series(&rules, OpConfig::LmuToLmu, opts.classify_depth) {
            Some(ext) => {
                modulus_tail_isometry_verdict(&classify_clamped(&ext, &opts.tail), opts.tail.tol)
            }
            None => Verdict::Inconclusive,
        }
    } else {
        Verdict::Inconclusive
    };
    IsometryReport::Modulus { verdict, max_violation, witness: None }
}

// ---------------------------------------------------------------------------
// cross-config isometry chains

/// The equality chain a cross-config isometry would force, with the step that
/// breaks it or the growth it implies.
pub fn cross_isometry_record(
    op: &MultOperator,
    opts: &AnalysisOptions,
) -> Result<CrossIsometryRecord, AnalysisError> {
    check_opts(opts)?;
    match op.config() {
        OpConfig::LToLmu => Ok(chain_l_to_lmu(op, opts)),
        OpConfig::LmuToL => Ok(chain_lmu_to_l(op, opts)),
        OpConfig::LmuToLmu => Err(AnalysisError::WrongConfig {
            operation: "cross-isometry-record",
            required: "l-to-lmu or lmu-to-l",
            got: op.config(),
        }),
    }
}

/// Characteristic functions are unit vectors of the Lipschitz-type space
/// (norm 2 at the root); an isometry into the weighted space pins the image
/// norms, and those equalities force the depth-weighted series to grow.
fn chain_l_to_lmu(op: &MultOperator, opts: &AnalysisOptions) -> CrossIsometryRecord {
    let tr = op.truncation();
    let tol = opts.cmp_tol;
    let mut steps = Vec::with_capacity(tr.levels());

    let root_rhs = if tr.vertex_count() > 1 { 2.0 } else { 1.0 };
    let root_lhs = op.weight().value(0) * op.symbol().value(0).norm();
    steps.push(ChainStep {
        name: "char-at-root",
        depth: 0,
        witness_id: Some(tr.external_id(0).unwrap_or(0)),
        lhs: root_lhs,
        rhs: root_rhs,
        holds: (root_lhs - root_rhs).abs() <= tol,
    });

    for k in 1..tr.levels() {
        let mut chosen = tr.level(k).start;
        let mut lhs = op.weight().value(chosen) * op.symbol().value(chosen).norm();
        let mut holds = (lhs - 1.0).abs() <= tol;
        if holds {
            for v in tr.level(k) {
                let x = op.weight().value(v) * op.symbol().value(v).norm();
                if (x - 1.0).abs() > tol {
                    chosen = v;
                    lhs = x;
                    holds = false;
                    break;
                }
            }
        }
        steps.push(ChainStep {
            name: "char-at-depth",
            depth: k as u32,
            witness_id: Some(tr.external_id(chosen).unwrap_or(u64::from(chosen))),
            lhs,
            rhs: 1.0,
            holds,
        });
    }

    let first_failure = steps.iter().position(|s| !s.holds);
    let divergence = first_failure.is_none().then(|| {
        let series = level_series(op);
        DivergenceSeries { start_depth: 1, values: series[1..].to_vec() }
    });
    CrossIsometryRecord {
        verdict: Verdict::No,
        steps,
        first_failure,
        divergence,
        reciprocal_gap: None,
    }
}

/// Normalized characteristic functions are unit vectors of the weighted
/// space; an isometry into the Lipschitz-type space forces the symbol modulus
/// to track the weight, and on that candidate the root-plus-interior-edges
/// chain value undercounts the full Lipschitz norm.
fn chain_lmu_to_l(op: &MultOperator, opts: &AnalysisOptions) -> CrossIsometryRecord {
    let tr = op.truncation();
    let tol = opts.cmp_tol;
    let ratio = |v: VertexId| op.symbol().value(v).norm() / op.weight().value(v);
    let mut steps = Vec::with_capacity(tr.levels());

    let root_factor = if tr.vertex_count() > 1 { 2.0 } else { 1.0 };
    let root_lhs = root_factor * ratio(0);
    steps.push(ChainStep {
        name: "scaled-char-at-root",
        depth: 0,
        witness_id: Some(tr.external_id(0).unwrap_or(0)),
        lhs: root_lhs,
        rhs: 1.0,
        holds: (root_lhs - 1.0).abs() <= tol,
    });

    for k in 1..tr.levels() {
        let mut chosen = tr.level(k).start;
        let mut lhs = ratio(chosen);
        let mut holds = (lhs - 1.0).abs() <= tol;
        if holds {
            for v in tr.level(k) {
                let x = ratio(v);
                if (x - 1.0).abs() > tol {
                    chosen = v;
                    lhs = x;
                    holds = false;
                    break;
                }
            }
        }
        steps.push(ChainStep {
            name: "scaled-char-at-depth",
            depth: k as u32,
            witness_id: Some(tr.external_id(chosen).unwrap_or(u64::from(chosen))),
            lhs,
            rhs: 1.0,
            holds,
        });
    }

    let first_failure = steps.iter().position(|s| !s.holds);
    let reciprocal_gap = first_failure.is_none().then(|| {
        // rephased reciprocal-weight vector: image modulus is the ratio
        let g: Vec<f64> = (0..tr.vertex_count() as u32).map(ratio).collect();
        let mut interior = 0.0f64;
        let mut all = 0.0f64;
        for v in 1..tr.vertex_count() as u32 {
            let p = tr.parent(v).unwrap().unwrap();
            let d = (g[v as usize] - g[p as usize]).abs();
            all = all.max(d);
            if tr.depth(v) >= 2 {
                interior = interior.max(d);
            }
        }
        ReciprocalGap {
            chain_value: g[0] + interior,
            full_lipschitz: g[0] + all,
            expected: 1.0,
        }
    });
    CrossIsometryRecord {
        verdict: Verdict::No,
        steps,
        first_failure,
        divergence: None,
        reciprocal_gap,
    }
}

// ---------------------------------------------------------------------------
// spectrum

/// Realized symbol values per level, for a radial symbol.
fn realized_level_values(op: &MultOperator) -> Vec<Complex64> {
    let tr = op.truncation();
    (0..tr.levels()).map(|k| op.symbol().value(tr.level(k).start)).collect()
}

/// Candidate accumulation values from a complex level sequence: a vanishing
/// modulus yields zero, a settled window yields its mean.
fn candidates_from_values(values: &[Complex64], params: &TailParams) -> (Vec<Complex64>, bool) {
    let len = values.len();
    if len < 3 {
        return (Vec::new(), false);
    }
    let moduli: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    if matches!(classify_clamped(&moduli, params).class, TailClass::TendsToZero) {
        return (vec![Complex64::new(0.0, 0.0)], true);
    }
    let w = params.window.clamp(3, len);
    let window = &values[len - w..];
    let mean = window.iter().sum::<Complex64>() / w as f64;
    let dev = window.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
    if dev <= params.tol {
        (vec![mean], true)
    } else {
        (Vec::new(), false)
    }
}

fn accumulation_candidates(
    op: &MultOperator,
    opts: &AnalysisOptions,
) -> (Vec<Complex64>, bool) {
    if op.truncation().covers_spec() {
        return (Vec::new(), true);
    }
    if let Some(d) = opts.declared_tail {
        return match d {
            DeclaredTail::Zero => (vec![Complex64::new(0.0, 0.0)], true),
            DeclaredTail::Limit { value } => (vec![value], true),
            DeclaredTail::Bounded | DeclaredTail::Unbounded => (Vec::new(), false),
        };
    }
    let Some(rules) = radial_rules_modulus(op) else { return (Vec::new(), false) };
    let last_depth = (op.truncation().levels() - 1) as u32;
    let cap = opts.classify_depth.max(last_depth);
    let extended: Option<Vec<Complex64>> = (0..=cap).map(|n| rules.expr.eval(n).ok()).collect();
    match extended {
        Some(values) => candidates_from_values(&values, &opts.tail),
        None => candidates_from_values(&realized_level_values(op), &opts.tail),
    }
}

/// Symbol values clustered at the given resolution, first-seen BFS order,
/// plus candidate accumulation values of the unrealized tail.
pub fn spectrum(op: &MultOperator, opts: &AnalysisOptions) -> Result<SpectrumApprox, AnalysisError> {
    require_config(op, OpConfig::LmuToLmu, "lmu-to-lmu", "spectrum")?;
    check_opts(opts)?;
    let tr = op.truncation();
    let mut points: Vec<SpectrumPoint> = Vec::new();
    for v in tr.vertices() {
        let z = op.symbol().value(v);
        match points.iter_mut().find(|p| (p.value - z).norm() <= opts.delta) {
            Some(p) => p.count += 1.0,
            None => points.push(SpectrumPoint {
                value: z,
                count: 1.0,
                witness_depth: tr.depth(v),
                witness_id: Some(tr.external_id(v).unwrap_or(u64::from(v))),
            }),
        }
    }
    let (accumulation_candidates, determined) = accumulation_candidates(op, opts);
    Ok(SpectrumApprox {
        resolution: opts.delta,
        closure_complete: tr.covers_spec() || determined,
        points,
        accumulation_candidates,
    })
}

/// Every characteristic function is an exact eigenvector: the identity holds
/// componentwise in floating point, zeros included.
pub fn eigen_check(op: &MultOperator, w: VertexId) -> Result<bool, AnalysisError> {
    require_config(op, OpConfig::LmuToLmu, "lmu-to-lmu", "eigen-check")?;
    let tr = op.truncation().clone();
    let chi = TreeFunction::char_fn(tr.clone(), w)?;
    let image = apply(op, &chi)?;
    let lambda = op.symbol().value(w);
    Ok(tr.vertices().all(|v| image.value(v) == lambda * chi.value(v)))
}

// ---------------------------------------------------------------------------
// full reports

pub fn analyze(op: &MultOperator, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    check_opts(opts)?;
    let tr = op.truncation();
    let tail = governing_tail(op, opts);
    let basis_value = level_series(op).into_iter().fold(0.0f64, f64::max);
    let bounded = BoundednessReport {
        verdict: bounded_verdict(tail.as_ref()),
        basis: basis_of(op.config()),
        value: basis_value,
    };
    let norm = norm_estimate(op, basis_value);
    let compact = compact_verdict(tail.as_ref(), opts.tail.tol);
    let bounded_below = match op.config() {
        OpConfig::LmuToLmu => Some(bounded_below(op, opts)?),
        _ => None,
    };
    let isometry = is_isometry(op, opts)?;
    let spectrum = match op.config() {
        OpConfig::LmuToLmu => Some(spectrum(op, opts)?),
        _ => None,
    };
    Ok(AnalysisReport {
        mode: AnalysisMode::Materialized,
        config: op.config(),
        depth_cap: tr.depth_cap(),
        levels: tr.levels(),
        vertex_count: Some(tr.vertex_count() as u64),
        complete_tree: tr.covers_spec(),
        tail,
        bounded,
        norm,
        compact,
        bounded_below,
        isometry,
        spectrum,
    })
}

// ---------------------------------------------------------------------------
// radial analysis: level-by-level, no materialization

/// BFS id of the first vertex of each level, while it fits in u64.
fn level_start_ids(spec: &TreeSpec, levels: usize) -> Vec<Option<u64>> {
    let mut out = Vec::with_capacity(levels);
    let mut acc: Option<u128> = Some(0);
    let mut size: Option<u128> = Some(1);
    for d in 0..levels {
        out.push(acc.and_then(|a| u64::try_from(a).ok()));
        let b = u128::from(spec.children_at_depth(d as u32).unwrap());
        acc = match (acc, size) {
            (Some(a), Some(s)) => a.checked_add(s),
            _ => None,
        };
        size = size.and_then(|s| s.checked_mul(b));
    }
    out
}

pub fn analyze_radial(
    rop: &RadialOperator,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    check_opts(opts)?;
    let spec = rop.spec();
    let sizes = spec.level_sizes(rop.depth_cap).unwrap();
    let levels = sizes.iter().take_while(|&&s| s > 0.0).count();
    let last_depth = (levels - 1) as u32;
    let covers = !spec.declared_infinite && spec.children_at_depth(last_depth).unwrap() == 0;

    let vals: Vec<Complex64> =
        (0..levels).map(|n| rop.symbol.eval(n as u32)).collect::<Result<_, _>>()?;
    let ws: Vec<f64> =
        (0..levels).map(|n| rop.weight.value(n as u32)).collect::<Result<_, _>>()?;
    let starts = level_start_ids(spec, levels);
    let config = rop.config();

    // same arithmetic, per level, as the materialized path
    let basis = |n: usize| -> f64 {
        let m = vals[n].norm();
        match config {
            OpConfig::LmuToLmu => m,
            OpConfig::LToLmu => ws[n] * f64::from(n as u32) * m,
            OpConfig::LmuToL => m / ws[n],
        }
    };
    let series: Vec<f64> = (0..levels).map(basis).collect();
    let basis_value = series.iter().copied().fold(0.0f64, f64::max);

    let extend = |rule_config: OpConfig| -> Option<Vec<f64>> {
        if !spec.declared_infinite || opts.classify_depth <= last_depth {
            return None;
        }
        let rules = RadialRules { expr: &rop.symbol, weight: Some(&rop.weight) };
        extended_level_series(&rules, rule_config, opts.classify_depth)
    };

    let tail: Option<TailReport> = if covers {
        None
    } else if config == OpConfig::LmuToLmu && opts.declared_tail.is_some() {
        Some(opts.declared_tail.unwrap().series_report())
    } else {
        match extend(config) {
            Some(ext) => Some(classify_clamped(&ext, &opts.tail)),
            None => Some(classify_clamped(&series, &opts.tail)),
        }
    };

    let bounded = BoundednessReport {
        verdict: bounded_verdict(tail.as_ref()),
        basis: basis_of(config),
        value: basis_value,
    };
    let norm = match config {
        OpConfig::LmuToLmu => NormEstimate::Exact { value: basis_value },
        OpConfig::LToLmu => {
            let root = ws[0] * vals[0].norm();
            NormEstimate::Interval { lo: (0.5 * root).max(basis_value), hi: root.max(basis_value) }
        }
        OpConfig::LmuToL => NormEstimate::Interval { lo: basis_value, hi: 3.0 * basis_value },
    };
    let compact = compact_verdict(tail.as_ref(), opts.tail.tol);

    let moduli_tail = |fallback: &[f64]| -> TailReport {
        if let Some(d) = opts.declared_tail {
            return d.series_report();
        }
        match extend(OpConfig::LmuToLmu) {
            Some(ext) => classify_clamped(&ext, &opts.tail),
            None => classify_clamped(fallback, &opts.tail),
        }
    };

    let bounded_below = match config {
        OpConfig::LmuToLmu => {
            let moduli: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
            let mut arg = 0usize;
            for (n, &m) in moduli.iter().enumerate() {
                if m < moduli[arg] {
                    arg = n;
                }
            }
            let inf = moduli[arg];
            let witness = Some(WitnessRef { id: starts[arg], depth: arg as u32 });
            let verdict = if inf == 0.0 {
                Verdict::No
            } else if covers {
                Verdict::Yes
            } else {
                bounded_below_from_tail(inf, &moduli_tail(&moduli), opts.tail.tol)
            };
            Some(BoundedBelowReport { verdict, inf_modulus: inf, witness })
        }
        _ => None,
    };

    let isometry = match config {
        OpConfig::LmuToLmu => {
            let mut arg = 0usize;
            let viol = |n: usize| (vals[n].norm() - 1.0).abs();
            for n in 1..levels {
                if viol(n) > viol(arg) {
                    arg = n;
                }
            }
            let max_violation = viol(arg);
            if max_violation > opts.iso_tol {
                IsometryReport::Modulus {
                    verdict: Verdict::No,
                    max_violation,
                    witness: Some(WitnessRef { id: starts[arg], depth: arg as u32 }),
                }
            } else if covers {
                IsometryReport::Modulus { verdict: Verdict::Yes, max_violation, witness: None }
            } else {
                let moduli: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
                let verdict =
                    modulus_tail_isometry_verdict(&moduli_tail(&moduli), opts.tail.tol);
                IsometryReport::Modulus { verdict, max_violation, witness: None }
            }
        }
        OpConfig::LToLmu => {
            IsometryReport::Cross(chain_l_to_lmu_radial(&vals, &ws, &starts, &series, opts))
        }
        OpConfig::LmuToL => {
            IsometryReport::Cross(chain_lmu_to_l_radial(&vals, &ws, &starts, opts))
        }
    };

    let spectrum = match config {
        OpConfig::LmuToLmu => {
            let mut points: Vec<SpectrumPoint> = Vec::new();
            for n in 0..levels {
                let z = vals[n];
                match points.iter_mut().find(|p| (p.value - z).norm() <= opts.delta) {
                    Some(p) => p.count += sizes[n],
                    None => points.push(SpectrumPoint {
                        value: z,
                        count: sizes[n],
                        witness_depth: n as u32,
                        witness_id: starts[n],
                    }),
                }
            }
            let (candidates, determined) = if covers {
                (Vec::new(), true)
            } else if let Some(d) = opts.declared_tail {
                match d {
                    DeclaredTail::Zero => (vec![Complex64::new(0.0, 0.0)], true),
                    DeclaredTail::Limit { value } => (vec![value], true),
                    _ => (Vec::new(), false),
                }
            } else {
                let cap = if spec.declared_infinite {
                    opts.classify_depth.max(last_depth)
                } else {
                    last_depth
                };
                let extended: Option<Vec<Complex64>> =
                    (0..=cap).map(|n| rop.symbol.eval(n).ok()).collect();
                match extended {
                    Some(values) => candidates_from_values(&values, &opts.tail),
                    None => candidates_from_values(&vals, &opts.tail),
                }
            };
            Some(SpectrumApprox {
                resolution: opts.delta,
                closure_complete: covers || determined,
                points,
                accumulation_candidates: candidates,
            })
        }
        _ => None,
    };

    Ok(AnalysisReport {
        mode: AnalysisMode::Radial,
        config,
        depth_cap: rop.depth_cap,
        levels,
        vertex_count: None,
        complete_tree: covers,
        tail,
        bounded,
        norm,
        compact,
        bounded_below,
        isometry,
        spectrum,
    })
}

fn chain_l_to_lmu_radial(
    vals: &[Complex64],
    ws: &[f64],
    starts: &[Option<u64>],
    series: &[f64],
    opts: &AnalysisOptions,
) -> CrossIsometryRecord {
    let tol = opts.cmp_tol;
    let levels = vals.len();
    let mut steps = Vec::with_capacity(levels);
    let root_rhs = if levels > 1 { 2.0 } else { 1.0 };
    let root_lhs = ws[0] * vals[0].norm();
    steps.push(ChainStep {
        name: "char-at-root",
        depth: 0,
        witness_id: starts[0],
        lhs: root_lhs,
        rhs: root_rhs,
        holds: (root_lhs - root_rhs).abs() <= tol,
    });
    for k in 1..levels {
        let lhs = ws[k] * vals[k].norm();
        steps.push(ChainStep {
            name: "char-at-depth",
            depth: k as u32,
            witness_id: starts[k],
            lhs,
            rhs: 1.0,
            holds: (lhs - 1.0).abs() <= tol,
        });
    }
    let first_failure = steps.iter().position(|s| !s.holds);
    let divergence = first_failure
        .is_none()
        .then(|| DivergenceSeries { start_depth: 1, values: series[1..].to_vec() });
    CrossIsometryRecord {
        verdict: Verdict::No,
        steps,
        first_failure,
        divergence,
        reciprocal_gap: None,
    }
}

fn chain_lmu_to_l_radial(
    vals: &[Complex64],
    ws: &[f64],
    starts: &[Option<u64>],
    opts: &AnalysisOptions,
) -> CrossIsometryRecord {
    let tol = opts.cmp_tol;
    let levels = vals.len();
    let g: Vec<f64> = (0..levels).map(|n| vals[n].norm() / ws[n]).collect();
    let mut steps = Vec::with_capacity(levels);
    let root_factor = if levels > 1 { 2.0 } else { 1.0 };
    let root_lhs = root_factor * g[0];
    steps.push(ChainStep {
        name: "scaled-char-at-root",
        depth: 0,
        witness_id: starts[0],
        lhs: root_lhs,
        rhs: 1.0,
        holds: (root_lhs - 1.0).abs() <= tol,
    });
    for k in 1..levels {
        steps.push(ChainStep {
            name: "scaled-char-at-depth",
            depth: k as u32,
            witness_id: starts[k],
            lhs: g[k],
            rhs: 1.0,
            holds: (g[k] - 1.0).abs() <= tol,
        });
    }
    let first_failure = steps.iter().position(|s| !s.holds);
    let reciprocal_gap = first_failure.is_none().then(|| {
        let mut interior = 0.0f64;
        let mut all = 0.0f64;
        for n in 1..levels {
            let d = (g[n] - g[n - 1]).abs();
            all = all.max(d);
            if n >= 2 {
                interior = interior.max(d);
            }
        }
        ReciprocalGap { chain_value: g[0] + interior, full_lipschitz: g[0] + all, expected: 1.0 }
    });
    CrossIsometryRecord {
        verdict: Verdict::No,
        steps,
        first_failure,
        divergence: None,
        reciprocal_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::space::WeightPreset;
    use approx::assert_abs_diff_eq;

    fn tree(children: u32, cap: u32) -> Arc<Truncation> {
        Arc::new(Truncation::build(&TreeSpec::homogeneous(children), cap).unwrap())
    }

    fn expr_op(tr: &Arc<Truncation>, sym: &str, mu: WeightPreset, config: OpConfig) -> MultOperator {
        let symbol = TreeFunction::from_expr(tr.clone(), parse(sym).unwrap()).unwrap();
        let weight = Weight::preset(tr.clone(), mu).unwrap();
        MultOperator::new(symbol, weight, config).unwrap()
    }

    fn radial_op(
        children: u32,
        cap: u32,
        sym: &str,
        mu: WeightPreset,
        config: OpConfig,
    ) -> RadialOperator {
        RadialOperator::new(
            TreeSpec::homogeneous(children),
            cap,
            parse(sym).unwrap(),
            RadialWeightFn::Preset(mu),
            config,
        )
        .unwrap()
    }

    #[test]
    fn apply_scales_pointwise() {
        let tr = tree(2, 3);
        let op = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let chi = TreeFunction::char_fn(tr.clone(), 7).unwrap();
        let image = apply(&op, &chi).unwrap();
        assert_eq!(image.value(7), Complex64::new(0.25, 0.0));
        for v in tr.vertices().filter(|&v| v != 7) {
            assert_eq!(image.value(v), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn apply_rejects_mismatched_trees() {
        let op = expr_op(&tree(2, 3), "n", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let other = TreeFunction::zero(tree(2, 4));
        assert!(matches!(
            apply(&op, &other),
            Err(AnalysisError::Space(SpaceError::TreeMismatch))
        ));
    }

    #[test]
    fn sup_modulus_is_the_exact_norm() {
        let tr = tree(2, 12);
        let opts = AnalysisOptions::default();
        let op = expr_op(&tr, "3*i", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        assert_eq!(sup_modulus(&op, &opts).unwrap().value, 3.0);

        let op = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        assert_eq!(sup_modulus(&op, &opts).unwrap().value, 1.0);

        let cross = expr_op(&tr, "n", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        assert!(matches!(
            sup_modulus(&cross, &opts),
            Err(AnalysisError::WrongConfig { .. })
        ));
    }

    #[test]
    fn compact_verdicts_for_radial_symbols() {
        let tr = tree(2, 10);
        let opts = AnalysisOptions::default();
        let decaying = expr_op(&tr, "2^-n", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        assert_eq!(is_compact(&decaying, &opts).unwrap(), Verdict::Yes);

        let constant = expr_op(&tr, "1", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        assert_eq!(is_compact(&constant, &opts).unwrap(), Verdict::No);

        let rotating = expr_op(&tr, "cis(n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        assert_eq!(is_compact(&rotating, &opts).unwrap(), Verdict::No);

        let growing = expr_op(&tr, "n", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        assert_eq!(is_bounded(&growing, &opts).unwrap(), Verdict::No);
        assert_eq!(is_compact(&growing, &opts).unwrap(), Verdict::No);
    }

    #[test]
    fn tabulated_oscillation_stays_inconclusive() {
        let tr = tree(2, 10);
        let vals: Vec<Complex64> = tr
            .vertices()
            .map(|v| Complex64::new(if tr.depth(v) % 2 == 0 { 0.0 } else { 0.5 }, 0.0))
            .collect();
        let symbol = TreeFunction::from_values(tr.clone(), vals).unwrap();
        let weight = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let op = MultOperator::new(symbol, weight, OpConfig::LmuToLmu).unwrap();
        let opts = AnalysisOptions::default();
        assert_eq!(is_compact(&op, &opts).unwrap(), Verdict::Inconclusive);
        assert_eq!(is_bounded(&op, &opts).unwrap(), Verdict::Yes);
    }

    #[test]
    fn complete_tree_gets_exact_verdicts() {
        let spec = TreeSpec::edge_list(10, vec![(10, 11), (10, 12), (12, 13)]);
        let tr = Arc::new(Truncation::build(&spec, 50).unwrap());
        let symbol = TreeFunction::from_fn(tr.clone(), |v| Complex64::new(f64::from(v) + 1.0, 0.0));
        let weight = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let op = MultOperator::new(symbol, weight, OpConfig::LmuToLmu).unwrap();
        let report = analyze(&op, &AnalysisOptions::default()).unwrap();
        report.validate().unwrap();
        assert!(report.complete_tree);
        assert!(report.tail.is_none());
        assert_eq!(report.bounded.verdict, Verdict::Yes);
        assert_eq!(report.compact, Verdict::Yes);
        assert_eq!(report.bounded_below.unwrap().verdict, Verdict::Yes);
        let spectrum = report.spectrum.unwrap();
        assert!(spectrum.closure_complete);
        assert_eq!(spectrum.points.len(), 4);
        // witnesses carry external ids
        assert_eq!(spectrum.points[0].witness_id, Some(10));
    }

    #[test]
    fn spectrum_of_a_constant_symbol_is_one_point() {
        let tr = tree(2, 4);
        let op = expr_op(&tr, "5", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let sp = spectrum(&op, &AnalysisOptions::default()).unwrap();
        assert_eq!(sp.points.len(), 1);
        assert_eq!(sp.points[0].value, Complex64::new(5.0, 0.0));
        assert_eq!(sp.points[0].count, 31.0);
        assert_eq!(sp.accumulation_candidates, vec![Complex64::new(5.0, 0.0)]);
        assert!(sp.closure_complete);
    }

    #[test]
    fn spectrum_of_reciprocal_depth_lists_each_level() {
        let tr = tree(2, 6);
        let op = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let sp = spectrum(&op, &AnalysisOptions::default()).unwrap();
        assert_eq!(sp.points.len(), 7);
        for (k, p) in sp.points.iter().enumerate() {
            assert_abs_diff_eq!(p.value.re, 1.0 / (k as f64 + 1.0), epsilon = 1e-15);
            assert_eq!(p.count, f64::from(1u32 << k));
            assert_eq!(p.witness_depth, k as u32);
        }
        assert_eq!(sp.accumulation_candidates, vec![Complex64::new(0.0, 0.0)]);
        assert!(sp.closure_complete);
        for w in [0u32, 3, 40, 126] {
            assert!(eigen_check(&op, w).unwrap());
        }
    }

    #[test]
    fn spectrum_rejects_bad_inputs() {
        let tr = tree(2, 3);
        let op = expr_op(&tr, "n", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let mut opts = AnalysisOptions::default();
        opts.delta = 0.0;
        assert!(matches!(spectrum(&op, &opts), Err(AnalysisError::BadParam(_))));
        let cross = expr_op(&tr, "n", WeightPreset::Constant(1.0), OpConfig::LmuToL);
        assert!(matches!(
            spectrum(&cross, &AnalysisOptions::default()),
            Err(AnalysisError::WrongConfig { .. })
        ));
    }

    #[test]
    fn declared_zero_tail_marks_finite_support() {
        let tr = tree(2, 4);
        let symbol = TreeFunction::from_fn(tr.clone(), |v| {
            if tr.depth(v) <= 1 { Complex64::new(2.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let weight = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let op = MultOperator::new(symbol, weight, OpConfig::LmuToLmu).unwrap();
        let mut opts = AnalysisOptions::default();
        opts.declared_tail = Some(DeclaredTail::Zero);
        let sp = spectrum(&op, &opts).unwrap();
        assert_eq!(sp.points.len(), 2);
        assert_eq!(sp.accumulation_candidates, vec![Complex64::new(0.0, 0.0)]);
        assert!(sp.closure_complete);
        assert_eq!(is_compact(&op, &opts).unwrap(), Verdict::Yes);
        let tail = governing_tail(&op, &opts).unwrap();
        assert_eq!(tail.provenance, Provenance::Declared);
    }

    #[test]
    fn bounded_below_cases() {
        let tr = tree(2, 10);
        let opts = AnalysisOptions::default();

        let unit = expr_op(&tr, "1", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let report = bounded_below(&unit, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::Yes);
        assert_eq!(report.inf_modulus, 1.0);

        let decaying = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let report = bounded_below(&decaying, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::No);
        assert!(report.inf_modulus > 0.0);

        let vanishing = TreeFunction::from_fn(tr.clone(), |v| {
            if v == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0, 0.0) }
        });
        let weight = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let op = MultOperator::new(vanishing, weight, OpConfig::LmuToLmu).unwrap();
        let report = bounded_below(&op, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::No);
        assert_eq!(report.inf_modulus, 0.0);
        assert_eq!(report.witness, Some(WitnessRef { id: Some(0), depth: 0 }));
    }

    #[test]
    fn isometry_modulus_cases() {
        let tr = tree(2, 8);
        let opts = AnalysisOptions::default();

        let rotation = expr_op(&tr, "cis(3*n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let report = is_isometry(&rotation, &opts).unwrap();
        let IsometryReport::Modulus { verdict, max_violation, witness } = report else {
            panic!("expected modulus report")
        };
        assert_eq!(verdict, Verdict::Yes);
        assert!(max_violation <= 1e-12);
        assert!(witness.is_none());

        let doubled = expr_op(&tr, "2", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let IsometryReport::Modulus { verdict, max_violation, witness } =
            is_isometry(&doubled, &opts).unwrap()
        else {
            panic!("expected modulus report")
        };
        assert_eq!(verdict, Verdict::No);
        assert_eq!(max_violation, 1.0);
        assert_eq!(witness, Some(WitnessRef { id: Some(0), depth: 0 }));

        // tabulated unimodular data on a window of an infinite tree: the
        // truncation cannot certify the rest
        let ones = TreeFunction::constant(tr.clone(), Complex64::new(1.0, 0.0));
        let weight = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let op = MultOperator::new(ones, weight, OpConfig::LmuToLmu).unwrap();
        let IsometryReport::Modulus { verdict, .. } = is_isometry(&op, &opts).unwrap() else {
            panic!("expected modulus report")
        };
        assert_eq!(verdict, Verdict::Inconclusive);
    }

    #[test]
    fn chain_from_lipschitz_space_diverges_on_the_candidate() {
        let tr = tree(2, 6);
        let weight = Weight::preset(tr.clone(), WeightPreset::Geometric(0.5)).unwrap();
        let w = weight.clone();
        let symbol = TreeFunction::from_fn(tr.clone(), move |v| {
            let scale = if v == 0 { 2.0 } else { 1.0 };
            Complex64::new(scale / w.value(v), 0.0)
        });
        let op = MultOperator::new(symbol, weight, OpConfig::LToLmu).unwrap();
        let record = cross_isometry_record(&op, &AnalysisOptions::default()).unwrap();
        assert_eq!(record.verdict, Verdict::No);
        assert_eq!(record.first_failure, None);
        assert!(record.steps.iter().all(|s| s.holds));
        let divergence = record.divergence.unwrap();
        assert_eq!(divergence.start_depth, 1);
        assert_eq!(divergence.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn chain_from_lipschitz_space_breaks_at_the_root_for_unit_symbol() {
        let tr = tree(2, 4);
        let op = expr_op(&tr, "1", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        let record = cross_isometry_record(&op, &AnalysisOptions::default()).unwrap();
        assert_eq!(record.first_failure, Some(0));
        assert_eq!(record.steps[0].lhs, 1.0);
        assert_eq!(record.steps[0].rhs, 2.0);
        assert!(record.divergence.is_none());
    }

    #[test]
    fn chain_into_lipschitz_space_exposes_the_dropped_edges() {
        let tr = tree(2, 6);
        let weight = Weight::preset(tr.clone(), WeightPreset::Geometric(0.5)).unwrap();
        let w = weight.clone();
        let symbol = TreeFunction::from_fn(tr.clone(), move |v| {
            let scale = if v == 0 { 0.5 } else { 1.0 };
            Complex64::new(scale * w.value(v), 0.0)
        });
        let op = MultOperator::new(symbol, weight, OpConfig::LmuToL).unwrap();
        let record = cross_isometry_record(&op, &AnalysisOptions::default()).unwrap();
        assert_eq!(record.first_failure, None);
        let gap = record.reciprocal_gap.unwrap();
        assert_eq!(gap.chain_value, 0.5);
        assert_eq!(gap.full_lipschitz, 1.0);
        assert_eq!(gap.expected, 1.0);
    }

    #[test]
    fn chain_into_lipschitz_space_breaks_for_unit_symbol() {
        let tr = tree(2, 4);
        let op = expr_op(&tr, "1", WeightPreset::Constant(1.0), OpConfig::LmuToL);
        let record = cross_isometry_record(&op, &AnalysisOptions::default()).unwrap();
        assert_eq!(record.first_failure, Some(0));
        assert!(record.reciprocal_gap.is_none());
    }

    #[test]
    fn norm_bounds_examples() {
        let tr = tree(2, 10);
        let opts = AnalysisOptions::default();

        let zero = expr_op(&tr, "0", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        let b = norm_bounds(&zero, &opts).unwrap();
        assert_eq!((b.lo, b.hi), (0.0, 0.0));

        let halving = expr_op(&tr, "2^-n", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        let b = norm_bounds(&halving, &opts).unwrap();
        assert_eq!((b.lo, b.hi), (0.5, 1.0));

        let matched = expr_op(&tr, "4^-n", WeightPreset::Geometric(0.5), OpConfig::LmuToL);
        let b = norm_bounds(&matched, &opts).unwrap();
        assert_eq!((b.lo, b.hi), (1.0, 3.0));
    }

    #[test]
    fn depth_weighted_sup_tracks_the_level_cap() {
        let tr = tree(2, 12);
        let opts = AnalysisOptions::default();
        let op = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        let nv = depth_weighted_sup(&op, &opts).unwrap();
        assert_abs_diff_eq!(nv.value, 12.0 / 13.0, epsilon = 1e-12);
        let tail = nv.tail_note.unwrap();
        let TailClass::TendsToLimit { limit } = tail.class else {
            panic!("expected a limit classification, got {:?}", tail.class)
        };
        assert!((limit - 1.0).abs() < 0.01);

        let vanishing = expr_op(&tr, "0", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        assert_eq!(depth_weighted_sup(&vanishing, &opts).unwrap().value, 0.0);
    }

    #[test]
    fn ratio_sup_examples() {
        let tr = tree(2, 10);
        let opts = AnalysisOptions::default();
        let matched = expr_op(&tr, "2^-n", WeightPreset::Geometric(0.5), OpConfig::LmuToL);
        assert_eq!(ratio_sup(&matched, &opts).unwrap().value, 1.0);
        assert_eq!(is_compact(&matched, &opts).unwrap(), Verdict::No);

        let faster = expr_op(&tr, "4^-n", WeightPreset::Geometric(0.5), OpConfig::LmuToL);
        assert_eq!(ratio_sup(&faster, &opts).unwrap().value, 1.0);
        assert_eq!(is_compact(&faster, &opts).unwrap(), Verdict::Yes);
    }

    #[test]
    fn cross_governing_series_ignores_declared_tail() {
        let tr = tree(2, 10);
        let mut opts = AnalysisOptions::default();
        opts.declared_tail = Some(DeclaredTail::Zero);
        let op = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LToLmu);
        let tail = governing_tail(&op, &opts).unwrap();
        assert!(matches!(tail.provenance, Provenance::Observed { .. }));
    }

    #[test]
    fn declared_limit_steers_verdicts() {
        let tr = tree(2, 5);
        let symbol = TreeFunction::from_fn(tr.clone(), |v| {
            Complex64::new(0.3 + 0.1 * f64::from(v % 2), 0.0)
        });
        let weight = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let op = MultOperator::new(symbol, weight, OpConfig::LmuToLmu).unwrap();
        let mut opts = AnalysisOptions::default();
        opts.declared_tail = Some(DeclaredTail::Limit { value: Complex64::new(0.3, 0.0) });
        assert_eq!(is_compact(&op, &opts).unwrap(), Verdict::No);
        let bb = bounded_below(&op, &opts).unwrap();
        assert_eq!(bb.verdict, Verdict::Yes);
        let sp = spectrum(&op, &opts).unwrap();
        assert_eq!(sp.accumulation_candidates, vec![Complex64::new(0.3, 0.0)]);
        assert!(sp.closure_complete);
    }

    #[test]
    fn analyze_assembles_a_consistent_report() {
        let tr = tree(2, 6);
        let op = expr_op(&tr, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let report = analyze(&op, &AnalysisOptions::default()).unwrap();
        report.validate().unwrap();
        assert_eq!(report.mode, AnalysisMode::Materialized);
        assert_eq!(report.bounded.verdict, Verdict::Yes);
        assert_eq!(report.norm, NormEstimate::Exact { value: 1.0 });
        assert_eq!(report.compact, Verdict::Yes);
        assert_eq!(report.bounded_below.unwrap().verdict, Verdict::No);
        assert!(matches!(
            report.isometry,
            IsometryReport::Modulus { verdict: Verdict::No, .. }
        ));
        assert!(!report.complete_tree);
        assert_eq!(report.vertex_count, Some(127));
    }

    #[test]
    fn radial_report_matches_materialized_bitwise() {
        for config in [OpConfig::LmuToLmu, OpConfig::LToLmu, OpConfig::LmuToL] {
            let rop = radial_op(2, 10, "1/(1+n)", WeightPreset::Geometric(0.5), config);
            let radial = analyze_radial(&rop, &AnalysisOptions::default()).unwrap();
            let mat =
                analyze(&rop.materialize(&BuildOptions::default()).unwrap(), &AnalysisOptions::default())
                    .unwrap();
            radial.validate().unwrap();
            mat.validate().unwrap();
            assert_eq!(radial.levels, mat.levels);
            assert_eq!(
                serde_json::to_value(&radial.norm).unwrap(),
                serde_json::to_value(&mat.norm).unwrap()
            );
            assert_eq!(
                serde_json::to_value(&radial.bounded).unwrap(),
                serde_json::to_value(&mat.bounded).unwrap()
            );
            assert_eq!(
                serde_json::to_value(&radial.tail).unwrap(),
                serde_json::to_value(&mat.tail).unwrap()
            );
            assert_eq!(radial.compact, mat.compact);
            assert_eq!(
                serde_json::to_value(&radial.bounded_below).unwrap(),
                serde_json::to_value(&mat.bounded_below).unwrap()
            );
            assert_eq!(
                serde_json::to_value(&radial.isometry).unwrap(),
                serde_json::to_value(&mat.isometry).unwrap()
            );
            assert_eq!(
                serde_json::to_value(&radial.spectrum).unwrap(),
                serde_json::to_value(&mat.spectrum).unwrap()
            );
        }
    }

    #[test]
    fn radial_mode_handles_depths_no_materialization_could() {
        let rop = radial_op(2, 50, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let report = analyze_radial(&rop, &AnalysisOptions::default()).unwrap();
        report.validate().unwrap();
        assert_eq!(report.norm, NormEstimate::Exact { value: 1.0 });
        let sp = report.spectrum.unwrap();
        assert_eq!(sp.points.len(), 51);
        assert_eq!(sp.points[50].count, 2f64.powi(50));
        assert_eq!(sp.points[50].witness_id, Some((1u64 << 50) - 1));
        assert_eq!(sp.accumulation_candidates, vec![Complex64::new(0.0, 0.0)]);
        assert_eq!(report.compact, Verdict::Yes);
        assert_eq!(report.bounded_below.unwrap().verdict, Verdict::No);

        // beyond u64 id range the witness ids drop out but counts survive
        let deep = radial_op(2, 200, "1/(1+n)", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let report = analyze_radial(&deep, &AnalysisOptions::default()).unwrap();
        report.validate().unwrap();
        let sp = report.spectrum.unwrap();
        assert_eq!(sp.points.len(), 201);
        assert_eq!(sp.points[64].witness_id, Some(u64::MAX));
        assert!(sp.points[65].witness_id.is_none());
        assert_eq!(sp.points[200].count, 2f64.powi(200));
    }

    #[test]
    fn options_are_validated() {
        let tr = tree(2, 3);
        let op = expr_op(&tr, "1", WeightPreset::Constant(1.0), OpConfig::LmuToLmu);
        let mut opts = AnalysisOptions::default();
        opts.tail.tol = 0.0;
        assert!(matches!(analyze(&op, &opts), Err(AnalysisError::BadParam(_))));
        let mut opts = AnalysisOptions::default();
        opts.cmp_tol = f64::NAN;
        assert!(matches!(analyze(&op, &opts), Err(AnalysisError::BadParam(_))));
    }

    #[test]
    fn radial_operator_requires_a_generator_spec() {
        let spec = TreeSpec::edge_list(0, vec![(0, 1)]);
        assert!(matches!(
            RadialOperator::new(
                spec,
                3,
                parse("n").unwrap(),
                RadialWeightFn::Preset(WeightPreset::Constant(1.0)),
                OpConfig::LmuToLmu,
            ),
            Err(AnalysisError::NotGenerator)
        ));
    }
}
