//! Weights, complex-valued tree functions, and the three norms used
//! throughout: the sup norm, the weighted sup norm, and the Lipschitz norm
//! built from differences along parent edges.
//!
//! Norms computed here are exact maxima over the truncation and never
//! extrapolate; radial sources additionally carry a tail classification of
//! their level series so callers can reason about behaviour past the cap.

use crate::expr::{classify_series, EvalError, RadialExpr, TailParams, TailReport};
use crate::tree::{TreeError, Truncation, VertexId};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpaceError {
    #[error("value table has {got} entries for a truncation with {want} vertices")]
    LengthMismatch { got: usize, want: usize },
    #[error("weight must be positive and finite, found {value} at vertex {vertex}")]
    NonpositiveWeight { vertex: VertexId, value: f64 },
    #[error("weight rule gives a non-real value at depth {n}")]
    NonrealWeight { n: u32 },
    #[error("nonfinite value at vertex {vertex}")]
    NonfiniteValue { vertex: VertexId },
    #[error("preset parameter must be positive and finite, found {0}")]
    BadPresetParam(f64),
    #[error("operands live on different truncations")]
    TreeMismatch,
    #[error("difference operator is undefined at the root")]
    DiffAtRoot,
    #[error("file error on line {line}: {message}")]
    FileFormat { line: usize, message: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Iterated logarithm factor: 1 at order zero, then `1 + ln` of the previous
/// order. Defined for x >= 1.
pub fn iterated_log_factor(order: u32, x: f64) -> f64 {
    match order {
        0 => 1.0,
        1 => 1.0 + x.ln(),
        j => 1.0 + iterated_log_factor(j - 1, x).ln(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WeightPreset {
    Constant(f64),
    /// ratio^depth
    Geometric(f64),
    /// 1/(1+depth)
    ReciprocalDepth,
    /// Product of iterated-log factors of orders 0..k at max(depth, 1).
    IteratedLog(u32),
}

impl WeightPreset {
    pub fn validate(&self) -> Result<(), SpaceError> {
        match self {
            WeightPreset::Constant(c) | WeightPreset::Geometric(c) => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(SpaceError::BadPresetParam(*c));
                }
            }
            WeightPreset::ReciprocalDepth | WeightPreset::IteratedLog(_) => {}
        }
        Ok(())
    }

    pub fn value(&self, depth: u32) -> f64 {
        match self {
            WeightPreset::Constant(c) => *c,
            WeightPreset::Geometric(r) => r.powi(depth as i32),
            WeightPreset::ReciprocalDepth => 1.0 / (1.0 + f64::from(depth)),
            WeightPreset::IteratedLog(k) => {
                let x = f64::from(depth.max(1));
                (0..*k).map(|j| iterated_log_factor(j, x)).product()
            }
        }
    }
}

/// A weight rule depending only on depth.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialWeightFn {
    Preset(WeightPreset),
    Expr(RadialExpr),
}

impl RadialWeightFn {
    pub fn value(&self, depth: u32) -> Result<f64, SpaceError> {
        let v = match self {
            RadialWeightFn::Preset(p) => p.value(depth),
            RadialWeightFn::Expr(e) => {
                let z = e.eval(depth)?;
                if z.im != 0.0 {
                    return Err(SpaceError::NonrealWeight { n: depth });
                }
                z.re
            }
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(SpaceError::NonpositiveWeight { vertex: 0, value: v });
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Tabulated,
    Radial(RadialWeightFn),
}

/// Positive weight realized on a truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    tr: Arc<Truncation>,
    values: Vec<f64>,
    source: WeightSource,
}

impl Weight {
    pub fn from_values(tr: Arc<Truncation>, values: Vec<f64>) -> Result<Self, SpaceError> {
        if values.len() != tr.vertex_count() {
            return Err(SpaceError::LengthMismatch {
                got: values.len(),
                want: tr.vertex_count(),
            });
        }
        for (v, &m) in values.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(SpaceError::NonpositiveWeight { vertex: v as u32, value: m });
            }
        }
        Ok(Weight { tr, values, source: WeightSource::Tabulated })
    }

    pub fn preset(tr: Arc<Truncation>, preset: WeightPreset) -> Result<Self, SpaceError> {
        preset.validate()?;
        Self::radial(tr, RadialWeightFn::Preset(preset))
    }

    pub fn from_expr(tr: Arc<Truncation>, expr: RadialExpr) -> Result<Self, SpaceError> {
        Self::radial(tr, RadialWeightFn::Expr(expr))
    }

    pub fn radial(tr: Arc<Truncation>, rule: RadialWeightFn) -> Result<Self, SpaceError> {
        let mut by_level = Vec::with_capacity(tr.levels());
        for n in 0..tr.levels() as u32 {
            let m = rule.value(n).map_err(|e| match e {
                SpaceError::NonpositiveWeight { value, .. } => {
                    SpaceError::NonpositiveWeight { vertex: tr.level(n as usize).start, value }
                }
                other => other,
            })?;
            by_level.push(m);
        }
        let values = tr
            .vertices()
            .map(|v| by_level[tr.depth(v) as usize])
            .collect();
        Ok(Weight { tr, values, source: WeightSource::Radial(rule) })
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        &self.tr
    }

    pub fn value(&self, v: VertexId) -> f64 {
        self.values[v as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> &WeightSource {
        &self.source
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.source, WeightSource::Radial(_))
    }

    /// Pointwise reciprocal, as a tree function.
    pub fn reciprocal(&self) -> TreeFunction {
        TreeFunction {
            tr: self.tr.clone(),
            values: self.values.iter().map(|&m| Complex64::new(1.0 / m, 0.0)).collect(),
            source: FnSource::Tabulated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FnSource {
    Tabulated,
    Radial(RadialExpr),
}

/// Complex-valued function on the vertices of a truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeFunction {
    tr: Arc<Truncation>,
    values: Vec<Complex64>,
    source: FnSource,
}

impl TreeFunction {
    pub fn zero(tr: Arc<Truncation>) -> Self {
        let n = tr.vertex_count();
        TreeFunction { tr, values: vec![Complex64::new(0.0, 0.0); n], source: FnSource::Tabulated }
    }

    pub fn constant(tr: Arc<Truncation>, c: Complex64) -> Self {
        let n = tr.vertex_count();
        TreeFunction { tr, values: vec![c; n], source: FnSource::Tabulated }
    }

    /// 1 at `w`, 0 elsewhere.
    pub fn char_fn(tr: Arc<Truncation>, w: VertexId) -> Result<Self, SpaceError> {
        if !tr.contains(w) {
            return Err(SpaceError::Tree(TreeError::UnknownVertex(w)));
        }
        let mut f = Self::zero(tr);
        f.values[w as usize] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn from_values(tr: Arc<Truncation>, values: Vec<Complex64>) -> Result<Self, SpaceError> {
        if values.len() != tr.vertex_count() {
            return Err(SpaceError::LengthMismatch {
                got: values.len(),
                want: tr.vertex_count(),
            });
        }
        for (v, z) in values.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(SpaceError::NonfiniteValue { vertex: v as u32 });
            }
        }
        Ok(TreeFunction { tr, values, source: FnSource::Tabulated })
    }

    pub fn from_fn(tr: Arc<Truncation>, f: impl Fn(VertexId) -> Complex64) -> Self {
        let values = tr.vertices().map(f).collect();
        TreeFunction { tr, values, source: FnSource::Tabulated }
    }

    pub fn from_expr(tr: Arc<Truncation>, expr: RadialExpr) -> Result<Self, SpaceError> {
        let by_level = expr.eval_levels(tr.levels() as u32 - 1)?;
        let values = tr
            .vertices()
            .map(|v| by_level[tr.depth(v) as usize])
            .collect();
        Ok(TreeFunction { tr, values, source: FnSource::Radial(expr) })
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        &self.tr
    }

    pub fn value(&self, v: VertexId) -> Complex64 {
        self.values[v as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn source(&self) -> &FnSource {
        &self.source
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.source, FnSource::Radial(_))
    }

    /// Per-level maxima of the modulus.
    pub fn level_moduli(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.tr.levels()];
        for v in self.tr.vertices() {
            let d = self.tr.depth(v) as usize;
            out[d] = out[d].max(self.values[v as usize].norm());
        }
        out
    }

    /// |f(v) - f(parent of v)|.
    pub fn diff(&self, v: VertexId) -> Result<f64, SpaceError> {
        let p = self.tr.parent(v)?.ok_or(SpaceError::DiffAtRoot)?;
        Ok((self.values[v as usize] - self.values[p as usize]).norm())
    }

    /// Max modulus over the truncation.
    pub fn sup_norm(&self) -> NormValue {
        let value = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        NormValue {
            value,
            exact_on_truncation: true,
            tail_note: if self.is_radial() { tail_note(&self.level_moduli()) } else { None },
        }
    }

    /// Max of weight times modulus over the truncation.
    pub fn weighted_norm(&self, mu: &Weight) -> Result<NormValue, SpaceError> {
        if !same_tree(&self.tr, &mu.tr) {
            return Err(SpaceError::TreeMismatch);
        }
        let mut value = 0.0f64;
        let mut by_level = vec![0.0f64; self.tr.levels()];
        for v in self.tr.vertices() {
            let m = mu.values[v as usize] * self.values[v as usize].norm();
            value = value.max(m);
            let d = self.tr.depth(v) as usize;
            by_level[d] = by_level[d].max(m);
        }
        let note = if self.is_radial() && mu.is_radial() { tail_note(&by_level) } else { None };
        Ok(NormValue { value, exact_on_truncation: true, tail_note: note })
    }

    /// Modulus at the root plus the max parent-edge difference.
    pub fn lipschitz_norm(&self) -> NormValue {
        let mut sup = 0.0f64;
        for v in 1..self.tr.vertex_count() as u32 {
            sup = sup.max(self.diff(v).unwrap());
        }
        NormValue {
            value: self.values[0].norm() + sup,
            exact_on_truncation: true,
            tail_note: None,
        }
    }
}

/// Norm of a function over a truncation: the exact max over realized
/// vertices, with an optional classification of the level series past it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormValue {
    pub value: f64,
    pub exact_on_truncation: bool,
    pub tail_note: Option<TailReport>,
}

fn tail_note(series: &[f64]) -> Option<TailReport> {
    classify_series(series, &TailParams::default()).ok()
}

fn same_tree(a: &Arc<Truncation>, b: &Arc<Truncation>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Check |f(v)| <= norm/mu(v) for the weighted norm. Compared in the
/// multiplied form so the max vertex passes bitwise.
pub fn point_eval_bound(f: &TreeFunction, mu: &Weight, v: VertexId) -> Result<bool, SpaceError> {
    if !same_tree(&f.tr, &mu.tr) {
        return Err(SpaceError::TreeMismatch);
    }
    if !f.tr.contains(v) {
        return Err(SpaceError::Tree(TreeError::UnknownVertex(v)));
    }
    let norm = f.weighted_norm(mu)?.value;
    Ok(mu.value(v) * f.value(v).norm() <= norm)
}

/// Check |f(v)| <= |f(root)| + depth(v) * sup-of-differences, and, when the
/// Lipschitz norm is at most 1, that |f(v)| <= depth(v) off the root.
pub fn depth_growth_bound(f: &TreeFunction, v: VertexId) -> Result<bool, SpaceError> {
    if !f.tr.contains(v) {
        return Err(SpaceError::Tree(TreeError::UnknownVertex(v)));
    }
    let lip = f.lipschitz_norm();
    let sup_diff = lip.value - f.value(0).norm();
    let depth = f64::from(f.tr.depth(v));
    let lhs = f.value(v).norm();
    let rhs = f.value(0).norm() + depth * sup_diff;
    // double-rounding slack
    let tol = 1e-12 * (1.0 + rhs.abs());
    let mut ok = lhs <= rhs + tol;
    if lip.value <= 1.0 && v != 0 {
        ok &= lhs <= depth + 1e-12 * (1.0 + depth);
    }
    Ok(ok)
}

/// CSV with header `id,re,im`, one row per truncation vertex.
pub fn read_function_csv(text: &str, tr: Arc<Truncation>) -> Result<TreeFunction, SpaceError> {
    let mut values = vec![None; tr.vertex_count()];
    let mut rows = csv_rows(text, &["id", "re", "im"])?;
    while let Some((line, fields)) = rows.next()? {
        let id = parse_field::<u32>(&fields[0], line, "id")?;
        let re = parse_field::<f64>(&fields[1], line, "re")?;
        let im = parse_field::<f64>(&fields[2], line, "im")?;
        store(&mut values, id, Complex64::new(re, im), line, tr.vertex_count())?;
    }
    let values = collect_complete(values)?;
    for (v, z) in values.iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(SpaceError::NonfiniteValue { vertex: v as u32 });
        }
    }
    Ok(TreeFunction { tr, values, source: FnSource::Tabulated })
}

pub fn write_function_csv(f: &TreeFunction) -> String {
    let mut out = String::from("id,re,im\n");
    for v in f.tr.vertices() {
        let z = f.values[v as usize];
        out.push_str(&format!("{},{},{}\n", v, z.re, z.im));
    }
    out
}

/// CSV with header `id,value`, one row per truncation vertex.
pub fn read_weight_csv(text: &str, tr: Arc<Truncation>) -> Result<Weight, SpaceError> {
    let mut values = vec![None; tr.vertex_count()];
    let mut rows = csv_rows(text, &["id", "value"])?;
    while let Some((line, fields)) = rows.next()? {
        let id = parse_field::<u32>(&fields[0], line, "id")?;
        let m = parse_field::<f64>(&fields[1], line, "value")?;
        store(&mut values, id, m, line, tr.vertex_count())?;
    }
    Weight::from_values(tr, collect_complete(values)?)
}

pub fn write_weight_csv(w: &Weight) -> String {
    let mut out = String::from("id,value\n");
    for v in w.tr.vertices() {
        out.push_str(&format!("{},{}\n", v, w.values[v as usize]));
    }
    out
}

struct CsvRows<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    arity: usize,
}

impl<'a> CsvRows<'a> {
    #[allow(clippy::should_implement_trait)]
    fn next(&mut self) -> Result<Option<(usize, Vec<String>)>, SpaceError> {
        for (idx, raw) in self.lines.by_ref() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<String> = trimmed.split(',').map(|s| s.trim().to_string()).collect();
            if fields.len() != self.arity {
                return Err(SpaceError::FileFormat {
                    line,
                    message: format!("expected {} fields, found {}", self.arity, fields.len()),
                });
            }
            return Ok(Some((line, fields)));
        }
        Ok(None)
    }
}

fn csv_rows<'a>(text: &'a str, header: &[&str]) -> Result<CsvRows<'a>, SpaceError> {
    let mut lines = text.lines().enumerate();
    loop {
        let Some((idx, raw)) = lines.next() else {
            return Err(SpaceError::FileFormat {
                line: 1,
                message: format!("missing header '{}'", header.join(",")),
            });
        };
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let got: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if got != header {
            return Err(SpaceError::FileFormat {
                line: idx + 1,
                message: format!("expected header '{}', found '{}'", header.join(","), trimmed),
            });
        }
        return Ok(CsvRows { lines, arity: header.len() });
    }
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    line: usize,
    name: &str,
) -> Result<T, SpaceError> {
    field.parse().map_err(|_| SpaceError::FileFormat {
        line,
        message: format!("'{field}' is not a valid {name}"),
    })
}

fn store<T>(
    values: &mut [Option<T>],
    id: u32,
    value: T,
    line: usize,
    n: usize,
) -> Result<(), SpaceError> {
    let slot = values.get_mut(id as usize).ok_or(SpaceError::FileFormat {
        line,
        message: format!("id {id} is outside the truncation (0..{n})"),
    })?;
    if slot.is_some() {
        return Err(SpaceError::FileFormat { line, message: format!("duplicate id {id}") });
    }
    *slot = Some(value);
    Ok(())
}

fn collect_complete<T>(values: Vec<Option<T>>) -> Result<Vec<T>, SpaceError> {
    let mut out = Vec::with_capacity(values.len());
    for (id, slot) in values.into_iter().enumerate() {
        match slot {
            Some(v) => out.push(v),
            None => {
                return Err(SpaceError::FileFormat {
                    line: 0,
                    message: format!("missing id {id}"),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn binary(depth: u32) -> Arc<Truncation> {
        Arc::new(Truncation::build(&TreeSpec::homogeneous(2), depth).unwrap())
    }

    fn depth_fn(tr: &Arc<Truncation>) -> TreeFunction {
        TreeFunction::from_fn(tr.clone(), |v| Complex64::new(f64::from(tr.depth(v)), 0.0))
    }

    #[test]
    fn sup_norm_examples() {
        let tr = binary(4);
        assert_eq!(TreeFunction::zero(tr.clone()).sup_norm().value, 0.0);
        let chi = TreeFunction::char_fn(tr.clone(), 5).unwrap();
        assert_eq!(chi.sup_norm().value, 1.0);
        let f = TreeFunction::from_expr(tr, RadialExpr::parse("1/(1+n)").unwrap()).unwrap();
        let nv = f.sup_norm();
        assert_eq!(nv.value, 1.0);
        assert!(nv.exact_on_truncation);
    }

    #[test]
    fn weighted_norm_examples() {
        let tr = binary(6);
        let mu = Weight::preset(tr.clone(), WeightPreset::Geometric(0.5)).unwrap();
        let chi = TreeFunction::char_fn(tr.clone(), 9).unwrap();
        assert_eq!(chi.weighted_norm(&mu).unwrap().value, mu.value(9));

        // mu * (1/mu) is exactly one for dyadic weights
        assert_eq!(mu.reciprocal().weighted_norm(&mu).unwrap().value, 1.0);
        let awkward = Weight::preset(tr.clone(), WeightPreset::ReciprocalDepth).unwrap();
        assert_abs_diff_eq!(
            awkward.reciprocal().weighted_norm(&awkward).unwrap().value,
            1.0,
            epsilon = 1e-12
        );

        // max over k of k * 2^-k on six levels
        let f = depth_fn(&tr);
        assert_eq!(f.weighted_norm(&mu).unwrap().value, 0.5);
    }

    #[test]
    fn weighted_norm_with_unit_weight_is_sup_norm() {
        let tr = binary(4);
        let mu = Weight::preset(tr.clone(), WeightPreset::Constant(1.0)).unwrap();
        let f = TreeFunction::from_fn(tr, |v| {
            Complex64::new(f64::from(v).sin() * 3.7, f64::from(v).cos())
        });
        assert_eq!(f.weighted_norm(&mu).unwrap().value, f.sup_norm().value);
    }

    #[test]
    fn diff_examples() {
        let tr = binary(4);
        let c = TreeFunction::constant(tr.clone(), Complex64::new(2.5, -1.0));
        for v in 1..c.truncation().vertex_count() as u32 {
            assert_eq!(c.diff(v).unwrap(), 0.0);
        }
        let f = depth_fn(&tr);
        for v in 1..tr.vertex_count() as u32 {
            assert_eq!(f.diff(v).unwrap(), 1.0);
        }
        let chi = TreeFunction::char_fn(tr, 5).unwrap();
        assert_eq!(chi.diff(5).unwrap(), 1.0);
        assert_eq!(chi.diff(0).unwrap_err(), SpaceError::DiffAtRoot);
    }

    #[test]
    fn lipschitz_norm_examples() {
        let tr = binary(3);
        let at_root = TreeFunction::char_fn(tr.clone(), 0).unwrap();
        assert_eq!(at_root.lipschitz_norm().value, 2.0);
        let off_root = TreeFunction::char_fn(tr.clone(), 4).unwrap();
        assert_eq!(off_root.lipschitz_norm().value, 1.0);
        assert_eq!(depth_fn(&tr).lipschitz_norm().value, 1.0);
    }

    #[test]
    fn point_eval_bound_examples() {
        let tr = binary(4);
        let mu = Weight::preset(tr.clone(), WeightPreset::Geometric(0.5)).unwrap();
        for v in [0u32, 3, 14] {
            let chi = TreeFunction::char_fn(tr.clone(), v).unwrap();
            assert!(point_eval_bound(&chi, &mu, v).unwrap());
        }
        let f = TreeFunction::from_fn(tr.clone(), |v| {
            Complex64::new((f64::from(v) * 1.3).sin(), (f64::from(v) * 0.7).cos())
        });
        for v in tr.vertices() {
            assert!(point_eval_bound(&f, &mu, v).unwrap());
        }
    }

    #[test]
    fn depth_growth_bound_examples() {
        let tr = binary(5);
        let c = TreeFunction::constant(tr.clone(), Complex64::new(0.0, 3.0));
        let f = depth_fn(&tr);
        for v in tr.vertices() {
            assert!(depth_growth_bound(&c, v).unwrap());
            assert!(depth_growth_bound(&f, v).unwrap());
        }
        // scale to Lipschitz norm at most one, engaging the depth bound
        let g = TreeFunction::from_fn(tr.clone(), |v| {
            Complex64::new(f64::from(tr.depth(v)) * 0.9, 0.0)
        });
        assert!(g.lipschitz_norm().value <= 1.0);
        for v in tr.vertices() {
            assert!(depth_growth_bound(&g, v).unwrap());
        }
    }

    #[test]
    fn radial_tail_notes() {
        let tr = Arc::new(Truncation::build(&TreeSpec::homogeneous(1), 60).unwrap());
        let f =
            TreeFunction::from_expr(tr.clone(), RadialExpr::parse("2^-n").unwrap()).unwrap();
        let note = f.sup_norm().tail_note.unwrap();
        assert_eq!(format!("{:?}", note.class), "TendsToZero");

        // short truncations cannot fill the default window
        let short = binary(3);
        let g =
            TreeFunction::from_expr(short, RadialExpr::parse("2^-n").unwrap()).unwrap();
        assert!(g.sup_norm().tail_note.is_none());

        // tabulated functions carry no note
        let t = TreeFunction::zero(tr);
        assert!(t.sup_norm().tail_note.is_none());
    }

    #[test]
    fn weight_validation() {
        let tr = binary(2);
        let bad = vec![1.0; tr.vertex_count() - 1];
        assert!(matches!(
            Weight::from_values(tr.clone(), bad),
            Err(SpaceError::LengthMismatch { .. })
        ));
        let mut zeroed = vec![1.0; tr.vertex_count()];
        zeroed[3] = 0.0;
        assert_eq!(
            Weight::from_values(tr.clone(), zeroed).unwrap_err(),
            SpaceError::NonpositiveWeight { vertex: 3, value: 0.0 }
        );
        assert_eq!(
            Weight::preset(tr.clone(), WeightPreset::Geometric(-1.0)).unwrap_err(),
            SpaceError::BadPresetParam(-1.0)
        );
        assert!(matches!(
            Weight::from_expr(tr.clone(), RadialExpr::parse("n-1").unwrap()),
            Err(SpaceError::NonpositiveWeight { .. })
        ));
        assert_eq!(
            Weight::from_expr(tr, RadialExpr::parse("cis(1)").unwrap()).unwrap_err(),
            SpaceError::NonrealWeight { n: 0 }
        );
    }

    #[test]
    fn iterated_log_values() {
        let e = std::f64::consts::E;
        assert_eq!(iterated_log_factor(0, e), 1.0);
        assert_abs_diff_eq!(iterated_log_factor(1, e), 2.0, epsilon = 1e-15);
        let p = WeightPreset::IteratedLog(2);
        // at depth 1 the argument is exactly 1, so every factor is 1
        assert_eq!(p.value(0), 1.0);
        assert_eq!(p.value(1), 1.0);
        assert!(p.value(5) > 1.0);
        // order-2 product at argument e, via the factor function directly
        let prod: f64 = (0..2).map(|j| iterated_log_factor(j, e)).product();
        assert_abs_diff_eq!(prod, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn truncation_mismatch_rejected() {
        let a = binary(3);
        let b = binary(4);
        let f = TreeFunction::zero(a.clone());
        let mu = Weight::preset(b, WeightPreset::Constant(1.0)).unwrap();
        assert_eq!(f.weighted_norm(&mu).unwrap_err(), SpaceError::TreeMismatch);

        // structurally equal truncations are accepted even if distinct allocations
        let a2 = binary(3);
        let mu2 = Weight::preset(a2, WeightPreset::Constant(1.0)).unwrap();
        assert!(f.weighted_norm(&mu2).is_ok());
        let _ = a;
    }

    #[test]
    fn function_csv_round_trip() {
        let tr = binary(2);
        let f = TreeFunction::from_fn(tr.clone(), |v| {
            Complex64::new(f64::from(v) * 0.25, -f64::from(v))
        });
        let text = write_function_csv(&f);
        let g = read_function_csv(&text, tr).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn weight_csv_round_trip() {
        let tr = binary(2);
        let mu = Weight::preset(tr.clone(), WeightPreset::Geometric(0.5)).unwrap();
        let text = write_weight_csv(&mu);
        let nu = read_weight_csv(&text, tr).unwrap();
        assert_eq!(mu.values(), nu.values());
    }

    #[test]
    fn csv_strictness() {
        let tr = binary(1);
        let missing = "id,re,im\n0,1,0\n1,1,0\n";
        assert!(matches!(
            read_function_csv(missing, tr.clone()),
            Err(SpaceError::FileFormat { .. })
        ));
        let dup = "id,value\n0,1\n1,1\n1,2\n2,1\n";
        let err = read_weight_csv(dup, tr.clone()).unwrap_err();
        assert!(matches!(err, SpaceError::FileFormat { line: 4, .. }));
        let stray = "id,value\n0,1\n1,1\n2,1\n7,1\n";
        assert!(matches!(
            read_weight_csv(stray, tr.clone()),
            Err(SpaceError::FileFormat { line: 5, .. })
        ));
        let bad_header = "vertex,value\n0,1\n";
        assert!(matches!(
            read_weight_csv(bad_header, tr.clone()),
            Err(SpaceError::FileFormat { line: 1, .. })
        ));
        let bad_field = "id,re,im\n0,x,0\n1,0,0\n2,0,0\n";
        assert!(matches!(
            read_function_csv(bad_field, tr),
            Err(SpaceError::FileFormat { line: 2, .. })
        ));
    }

    fn complex_strategy() -> impl Strategy<Value = Complex64> {
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(re, im)| Complex64::new(re, im))
    }

    proptest! {
        #[test]
        fn norm_axioms(
            fv in proptest::collection::vec(complex_strategy(), 15),
            gv in proptest::collection::vec(complex_strategy(), 15),
            c in complex_strategy(),
        ) {
            let tr = binary(3);
            let mu = Weight::preset(tr.clone(), WeightPreset::Geometric(0.5)).unwrap();
            let f = TreeFunction::from_values(tr.clone(), fv.clone()).unwrap();
            let g = TreeFunction::from_values(tr.clone(), gv.clone()).unwrap();
            let cf = TreeFunction::from_values(
                tr.clone(),
                fv.iter().map(|z| c * z).collect(),
            ).unwrap();
            let sum = TreeFunction::from_values(
                tr,
                fv.iter().zip(&gv).map(|(a, b)| a + b).collect(),
            ).unwrap();

            let norms = |h: &TreeFunction| -> [f64; 3] {
                [h.sup_norm().value, h.weighted_norm(&mu).unwrap().value, h.lipschitz_norm().value]
            };
            let nf = norms(&f);
            let ng = norms(&g);
            let ncf = norms(&cf);
            let nsum = norms(&sum);
            for k in 0..3 {
                prop_assert!((ncf[k] - c.norm() * nf[k]).abs() <= 1e-9 * (1.0 + nf[k]));
                prop_assert!(nsum[k] <= nf[k] + ng[k] + 1e-9);
            }
        }

        #[test]
        fn pointwise_bounds_hold(
            fv in proptest::collection::vec(complex_strategy(), 31),
        ) {
            let tr = binary(4);
            let mu = Weight::preset(tr.clone(), WeightPreset::ReciprocalDepth).unwrap();
            let f = TreeFunction::from_values(tr.clone(), fv).unwrap();
            for v in tr.vertices() {
                prop_assert!(point_eval_bound(&f, &mu, v).unwrap());
                prop_assert!(depth_growth_bound(&f, v).unwrap());
            }
        }
    }
}
