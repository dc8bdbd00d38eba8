//! Radial expressions: closed-form functions of the depth variable `n`.
//!
//! Grammar (left-associative, precedence power > unary > mul/div > add/sub):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := ('-'|'+') unary | power
//! power  := atom ('^' ('-'|'+')* atom)*
//! atom   := number | 'n' | 'i' | 'e' | 'pi'
//!         | ('exp'|'log'|'sqrt'|'abs'|'cis') '(' expr ')'
//!         | '(' expr ')'
//! ```
//!
//! Values are complex; `log`, `sqrt` and powers use the principal branch and
//! `cis(t) = exp(i t)` requires a real argument.

use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    I,
    E,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuncOp {
    Exp,
    Log,
    Sqrt,
    Abs,
    Cis,
}

/// Expression tree over the depth variable `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialExpr {
    Num(f64),
    Const(NamedConst),
    Var,
    Neg(Box<RadialExpr>),
    Func(FuncOp, Box<RadialExpr>),
    Bin(BinOp, Box<RadialExpr>, Box<RadialExpr>),
}

/// Parse failure with a 1-based column position.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at column {col}: {kind}")]
pub struct ParseError {
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("malformed number")]
    BadNumber,
    #[error("unknown name '{0}'")]
    UnknownName(String),
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("trailing input")]
    TrailingInput,
}

/// Evaluation failure at a specific depth.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("evaluation error at n = {n}: {kind}")]
pub struct EvalError {
    pub n: u32,
    pub kind: EvalErrorKind,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of zero")]
    LogOfZero,
    #[error("zero base with non-positive exponent")]
    ZeroToNonpositive,
    #[error("cis of a non-real argument")]
    NonRealCisArgument,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

fn lex(src: &str) -> Result<Lexer, ParseError> {
    let bytes: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
            }
            '+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, col));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, col));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, col));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == '.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent suffix only when it cannot be the constant `e`
                // followed by an operator: require a digit after e/E or sign.
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| ParseError { col, kind: ParseErrorKind::BadNumber })?;
                toks.push((Tok::Num(v), col));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let name: String = bytes[start..i].iter().collect();
                toks.push((Tok::Name(name), col));
            }
            other => {
                return Err(ParseError { col, kind: ParseErrorKind::UnexpectedChar(other) })
            }
        }
    }
    Ok(Lexer { toks, pos: 0, end_col: bytes.len() + 1 })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, c)| c).unwrap_or(self.end_col)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok, what: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError { col: self.col(), kind: ParseErrorKind::Expected(what) })
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

pub fn parse(src: &str) -> Result<RadialExpr, ParseError> {
    let mut lx = lex(src)?;
    let e = parse_expr(&mut lx)?;
    if lx.peek().is_some() {
        return Err(ParseError { col: lx.col(), kind: ParseErrorKind::TrailingInput });
    }
    Ok(e)
}

fn parse_expr(lx: &mut Lexer) -> Result<RadialExpr, ParseError> {
    let mut acc = parse_term(lx)?;
    loop {
        match lx.peek() {
            Some(Tok::Plus) => {
                lx.bump();
                let rhs = parse_term(lx)?;
                acc = RadialExpr::Bin(BinOp::Add, Box::new(acc), Box::new(rhs));
            }
            Some(Tok::Minus) => {
                lx.bump();
                let rhs = parse_term(lx)?;
                acc = RadialExpr::Bin(BinOp::Sub, Box::new(acc), Box::new(rhs));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_term(lx: &mut Lexer) -> Result<RadialExpr, ParseError> {
    let mut acc = parse_unary(lx)?;
    loop {
        match lx.peek() {
            Some(Tok::Star) => {
                lx.bump();
                let rhs = parse_unary(lx)?;
                acc = RadialExpr::Bin(BinOp::Mul, Box::new(acc), Box::new(rhs));
            }
            Some(Tok::Slash) => {
                lx.bump();
                let rhs = parse_unary(lx)?;
                acc = RadialExpr::Bin(BinOp::Div, Box::new(acc), Box::new(rhs));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_unary(lx: &mut Lexer) -> Result<RadialExpr, ParseError> {
    match lx.peek() {
        Some(Tok::Minus) => {
            lx.bump();
            Ok(RadialExpr::Neg(Box::new(parse_unary(lx)?)))
        }
        Some(Tok::Plus) => {
            lx.bump();
            parse_unary(lx)
        }
        _ => parse_power(lx),
    }
}

fn parse_power(lx: &mut Lexer) -> Result<RadialExpr, ParseError> {
    let mut acc = parse_atom(lx)?;
    while lx.peek() == Some(&Tok::Caret) {
        lx.bump();
        // Signs are admitted in the exponent so `2^-n` parses; anything more
        // complex needs parentheses.
        let mut flips = 0u32;
        loop {
            match lx.peek() {
                Some(Tok::Minus) => {
                    flips += 1;
                    lx.bump();
                }
                Some(Tok::Plus) => {
                    lx.bump();
                }
                _ => break,
            }
        }
        let mut rhs = parse_atom(lx)?;
        if flips % 2 == 1 {
            rhs = RadialExpr::Neg(Box::new(rhs));
        }
        acc = RadialExpr::Bin(BinOp::Pow, Box::new(acc), Box::new(rhs));
    }
    Ok(acc)
}

fn parse_atom(lx: &mut Lexer) -> Result<RadialExpr, ParseError> {
    let col = lx.col();
    match lx.bump() {
        Some(Tok::Num(v)) => Ok(RadialExpr::Num(v)),
        Some(Tok::LParen) => {
            let e = parse_expr(lx)?;
            lx.eat(&Tok::RParen, "')'")?;
            Ok(e)
        }
        Some(Tok::Name(name)) => match name.as_str() {
            "n" => Ok(RadialExpr::Var),
            "i" => Ok(RadialExpr::Const(NamedConst::I)),
            "e" => Ok(RadialExpr::Const(NamedConst::E)),
            "pi" => Ok(RadialExpr::Const(NamedConst::Pi)),
            "exp" | "log" | "sqrt" | "abs" | "cis" => {
                let f = match name.as_str() {
                    "exp" => FuncOp::Exp,
                    "log" => FuncOp::Log,
                    "sqrt" => FuncOp::Sqrt,
                    "abs" => FuncOp::Abs,
                    _ => FuncOp::Cis,
                };
                lx.eat(&Tok::LParen, "'('")?;
                let arg = parse_expr(lx)?;
                lx.eat(&Tok::RParen, "')'")?;
                Ok(RadialExpr::Func(f, Box::new(arg)))
            }
            _ => Err(ParseError { col, kind: ParseErrorKind::UnknownName(name) }),
        },
        Some(_) => Err(ParseError { col, kind: ParseErrorKind::Expected("a value") }),
        None => Err(ParseError { col, kind: ParseErrorKind::UnexpectedEnd }),
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

impl RadialExpr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse(src)
    }

    /// Evaluate at depth `n`.
    pub fn eval(&self, n: u32) -> Result<Complex64, EvalError> {
        let err = |kind| EvalError { n, kind };
        match self {
            RadialExpr::Num(v) => Ok(Complex64::new(*v, 0.0)),
            RadialExpr::Const(NamedConst::I) => Ok(Complex64::new(0.0, 1.0)),
            RadialExpr::Const(NamedConst::E) => Ok(Complex64::new(std::f64::consts::E, 0.0)),
            RadialExpr::Const(NamedConst::Pi) => Ok(Complex64::new(std::f64::consts::PI, 0.0)),
            RadialExpr::Var => Ok(Complex64::new(n as f64, 0.0)),
            RadialExpr::Neg(a) => Ok(-a.eval(n)?),
            RadialExpr::Func(f, a) => {
                let v = a.eval(n)?;
                match f {
                    FuncOp::Exp => Ok(v.exp()),
                    FuncOp::Log => {
                        if v == Complex64::new(0.0, 0.0) {
                            Err(err(EvalErrorKind::LogOfZero))
                        } else {
                            Ok(v.ln())
                        }
                    }
                    FuncOp::Sqrt => Ok(v.sqrt()),
                    FuncOp::Abs => Ok(Complex64::new(v.norm(), 0.0)),
                    FuncOp::Cis => {
                        if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
                            Err(err(EvalErrorKind::NonRealCisArgument))
                        } else {
                            Ok(Complex64::new(v.re.cos(), v.re.sin()))
                        }
                    }
                }
            }
            RadialExpr::Bin(op, a, b) => {
                let x = a.eval(n)?;
                let y = b.eval(n)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y == Complex64::new(0.0, 0.0) {
                            Err(err(EvalErrorKind::DivisionByZero))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => pow_principal(x, y).map_err(err),
                }
            }
        }
    }

    /// Evaluate at every depth `0..=cap`.
    pub fn eval_levels(&self, cap: u32) -> Result<Vec<Complex64>, EvalError> {
        (0..=cap).map(|n| self.eval(n)).collect()
    }
}

/// Principal-branch power; real positive base with real exponent keeps full
/// f64 accuracy via `powf`.
fn pow_principal(base: Complex64, exp: Complex64) -> Result<Complex64, EvalErrorKind> {
    if base == Complex64::new(0.0, 0.0) {
        return if exp == Complex64::new(0.0, 0.0) {
            Ok(Complex64::new(1.0, 0.0))
        } else if exp.im == 0.0 && exp.re > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(EvalErrorKind::ZeroToNonpositive)
        };
    }
    if base.im == 0.0 && exp.im == 0.0 && base.re > 0.0 {
        return Ok(Complex64::new(base.re.powf(exp.re), 0.0));
    }
    Ok(base.powc(exp))
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

impl RadialExpr {
    fn prec(&self) -> u8 {
        match self {
            RadialExpr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            RadialExpr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            RadialExpr::Neg(_) => 3,
            RadialExpr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, e: &RadialExpr, min_prec: u8) -> fmt::Result {
    if e.prec() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for RadialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialExpr::Num(v) => write!(f, "{v}"),
            RadialExpr::Const(NamedConst::I) => write!(f, "i"),
            RadialExpr::Const(NamedConst::E) => write!(f, "e"),
            RadialExpr::Const(NamedConst::Pi) => write!(f, "pi"),
            RadialExpr::Var => write!(f, "n"),
            RadialExpr::Neg(a) => {
                write!(f, "-")?;
                fmt_child(f, a, 3)
            }
            RadialExpr::Func(op, a) => {
                let name = match op {
                    FuncOp::Exp => "exp",
                    FuncOp::Log => "log",
                    FuncOp::Sqrt => "sqrt",
                    FuncOp::Abs => "abs",
                    FuncOp::Cis => "cis",
                };
                write!(f, "{name}({a})")
            }
            RadialExpr::Bin(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                fmt_child(f, a, prec)?;
                write!(f, "{sym}")?;
                if *op == BinOp::Pow {
                    // `a^-b` needs no parentheses, anything else at or below
                    // power precedence does (power chains are left-assoc).
                    match &**b {
                        RadialExpr::Neg(inner) => {
                            write!(f, "-")?;
                            fmt_child(f, inner, 5)
                        }
                        other => fmt_child(f, other, 5),
                    }
                } else {
                    // Left-associative: right child at equal precedence needs parens.
                    fmt_child(f, b, prec + 1)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tail classification
// ---------------------------------------------------------------------------

/// Outcome of classifying the far end of a nonnegative level series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum TailClass {
    TendsToZero,
    TendsToLimit { limit: f64 },
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Last-window statistics backing a classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEvidence {
    pub window_min: f64,
    pub window_max: f64,
    pub last: f64,
    pub series_max: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Observed { levels: usize },
    Declared,
}

/// A tail classification together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub class: TailClass,
    pub provenance: Provenance,
    pub evidence: Option<TailEvidence>,
}

impl TailReport {
    pub fn declared(class: TailClass) -> Self {
        TailReport { class, provenance: Provenance::Declared, evidence: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailParams {
    pub window: usize,
    pub tol: f64,
    pub burn_in: usize,
}

impl Default for TailParams {
    fn default() -> Self {
        TailParams { window: 20, tol: 1e-6, burn_in: 5 }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TailError {
    #[error("window must be at least 3, got {0}")]
    WindowTooSmall(usize),
    #[error("window of {window} levels exceeds the {available} available after burn-in")]
    WindowTooLarge { window: usize, available: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Classify the tail of a nonnegative series indexed by level.
///
/// Checks are applied in order: tends-to-zero (window max below `tol` and
/// nonincreasing up to `tol` from burn-in on), tends-to-limit (window
/// oscillation below `tol`), unbounded (strictly increasing window with last
/// value above `1/tol`), then bounded versus inconclusive (a still-climbing
/// window proves nothing either way).
pub fn classify_series(series: &[f64], params: &TailParams) -> Result<TailReport, TailError> {
    if params.window < 3 {
        return Err(TailError::WindowTooSmall(params.window));
    }
    let levels = series.len();
    let available = levels.saturating_sub(params.burn_in);
    if params.window > available {
        return Err(TailError::WindowTooLarge { window: params.window, available });
    }

    let window = &series[levels - params.window..];
    let post = &series[params.burn_in..];
    let wmax = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let wmin = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let evidence = TailEvidence {
        window_min: wmin,
        window_max: wmax,
        last: series[levels - 1],
        series_max: series.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        levels,
    };
    let report = |class| TailReport {
        class,
        provenance: Provenance::Observed { levels },
        evidence: Some(evidence),
    };

    if window.iter().any(|v| v.is_nan()) {
        return Ok(report(TailClass::Inconclusive));
    }
    if window.iter().any(|v| v.is_infinite()) {
        return Ok(report(TailClass::Unbounded));
    }

    let nonincreasing = post.windows(2).all(|w| w[1] <= w[0] + params.tol);
    if wmax < params.tol && nonincreasing {
        return Ok(report(TailClass::TendsToZero));
    }
    if wmax - wmin < params.tol {
        return Ok(report(TailClass::TendsToLimit { limit: 0.5 * (wmax + wmin) }));
    }
    let strictly_increasing = window.windows(2).all(|w| w[1] > w[0]);
    if strictly_increasing {
        if evidence.last > 1.0 / params.tol {
            return Ok(report(TailClass::Unbounded));
        }
        return Ok(report(TailClass::Inconclusive));
    }
    Ok(report(TailClass::Bounded))
}

/// Classify the modulus of a radial expression over depths `0..=depth`.
pub fn classify_expr_tail(
    expr: &RadialExpr,
    depth: u32,
    params: &TailParams,
) -> Result<TailReport, TailError> {
    let series: Vec<f64> =
        (0..=depth).map(|n| expr.eval(n).map(|v| v.norm())).collect::<Result<_, _>>()?;
    classify_series(&series, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(src: &str, n: u32) -> Complex64 {
        parse(src).unwrap().eval(n).unwrap()
    }

    #[test]
    fn parses_reciprocal_depth() {
        let e = parse("1/(1+n)").unwrap();
        assert_eq!(ev("1/(1+n)", 0), Complex64::new(1.0, 0.0));
        assert_relative_eq!(e.eval(3).unwrap().re, 0.25);
        assert_eq!(e.eval(3).unwrap().im, 0.0);
    }

    #[test]
    fn geometric_times_depth() {
        // 2^-n * n at n = 2: 0.25 * 2 = 0.5
        assert_relative_eq!(ev("2^-n * n", 2).re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(ev("n*2^-n", 3).re, 0.375, max_relative = 1e-12);
    }

    #[test]
    fn cis_has_unit_modulus() {
        for n in 0..200 {
            let v = ev("cis(3*n)", n);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn precedence_and_associativity() {
        // power binds tighter than unary minus
        assert_relative_eq!(ev("-n^2", 2).re, -4.0);
        // power chains are left-associative: (2^3)^2, not 2^(3^2)
        assert_relative_eq!(ev("2^3^2", 0).re, 64.0);
        assert_relative_eq!(ev("1+2*3^2", 0).re, 19.0);
        assert_relative_eq!(ev("2--3", 0).re, 5.0);
        assert_relative_eq!(ev("log(e)", 0).re, 1.0);
        assert_relative_eq!(ev("sqrt(abs(-4))", 0).re, 2.0);
    }

    #[test]
    fn complex_arithmetic() {
        let v = ev("i*i", 0);
        assert_relative_eq!(v.re, -1.0);
        assert!(v.im.abs() < 1e-15);
        let v = ev("exp(i*pi)", 0);
        assert_relative_eq!(v.re, -1.0, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_columns() {
        let e = parse("1 + $").unwrap_err();
        assert_eq!(e.col, 5);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedChar('$')));

        let e = parse("1/(1+n").unwrap_err();
        assert_eq!(e.col, 7);

        let e = parse("2 + frob(n)").unwrap_err();
        assert_eq!(e.col, 5);
        assert!(matches!(e.kind, ParseErrorKind::UnknownName(_)));

        let e = parse("1 2").unwrap_err();
        assert_eq!(e.col, 3);
        assert!(matches!(e.kind, ParseErrorKind::TrailingInput));
    }

    #[test]
    fn eval_errors_carry_depth() {
        let e = parse("1/n").unwrap().eval(0).unwrap_err();
        assert_eq!(e.n, 0);
        assert_eq!(e.kind, EvalErrorKind::DivisionByZero);

        let e = parse("log(n)").unwrap().eval(0).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::LogOfZero);

        let e = parse("0^-1").unwrap().eval(5).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::ZeroToNonpositive);

        let e = parse("cis(i)").unwrap().eval(0).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::NonRealCisArgument);
    }

    #[test]
    fn scientific_literals_and_e() {
        assert_relative_eq!(ev("1e-3", 0).re, 0.001);
        assert_relative_eq!(ev("2.5e2", 0).re, 250.0);
        // `e` alone is Euler's number
        assert_relative_eq!(ev("2*e", 0).re, 2.0 * std::f64::consts::E);
    }

    #[test]
    fn print_parse_round_trip() {
        let sources = [
            "1/(1+n)",
            "2^-n * n",
            "-n^2",
            "2^3^2",
            "cis(3*n)",
            "1+2*3^2",
            "(1+n)*(2-n)",
            "sqrt(n+1)/log(n+2)",
            "abs(cis(n)-1)",
            "-(1+n)",
            "2^(n+1)",
            "n/2/3",
            "1-2-3",
            "e^-n",
            "2*pi*n",
        ];
        for src in sources {
            let a = parse(src).unwrap();
            let printed = a.to_string();
            let b = parse(&printed).unwrap_or_else(|e| panic!("reparse of {printed:?}: {e}"));
            for n in 0..=100 {
                match (a.eval(n), b.eval(n)) {
                    (Ok(x), Ok(y)) => {
                        let d = (x - y).norm();
                        assert!(d <= 1e-9 * (1.0 + x.norm()), "{src} vs {printed} at {n}");
                    }
                    (Err(_), Err(_)) => {}
                    (x, y) => panic!("{src} vs {printed} at {n}: {x:?} vs {y:?}"),
                }
            }
        }
    }

    #[test]
    fn classify_reciprocal_depth_tends_to_zero() {
        let e = parse("1/(1+n)").unwrap();
        let params = TailParams { window: 20, tol: 1e-2, burn_in: 5 };
        let r = classify_expr_tail(&e, 200, &params).unwrap();
        assert_eq!(r.class, TailClass::TendsToZero);
    }

    #[test]
    fn classify_constant_tends_to_limit() {
        let series = vec![1.0; 60];
        let r = classify_series(&series, &TailParams::default()).unwrap();
        assert_eq!(r.class, TailClass::TendsToLimit { limit: 1.0 });
    }

    #[test]
    fn classify_linear_growth_unbounded() {
        let e = parse("n").unwrap();
        let params = TailParams { window: 20, tol: 1e-2, burn_in: 5 };
        let r = classify_expr_tail(&e, 200, &params).unwrap();
        assert_eq!(r.class, TailClass::Unbounded);
        // with a tighter tol the same prefix is merely inconclusive
        let params = TailParams { window: 20, tol: 1e-6, burn_in: 5 };
        let r = classify_expr_tail(&e, 200, &params).unwrap();
        assert_eq!(r.class, TailClass::Inconclusive);
    }

    #[test]
    fn classify_oscillation_bounded() {
        let series: Vec<f64> = (0..100).map(|n| 2.0 + (n as f64).sin()).collect();
        let r = classify_series(&series, &TailParams::default()).unwrap();
        assert_eq!(r.class, TailClass::Bounded);
    }

    #[test]
    fn classify_scaling_preserves_tends_to_zero() {
        let e = parse("2^-n").unwrap();
        let params = TailParams { window: 10, tol: 1e-4, burn_in: 5 };
        for c in [1.0, 0.5, 0.125, 0.01] {
            let series: Vec<f64> =
                (0..=60).map(|n| c * e.eval(n).unwrap().norm()).collect();
            let r = classify_series(&series, &params).unwrap();
            assert_eq!(r.class, TailClass::TendsToZero, "c = {c}");
        }
    }

    #[test]
    fn classify_window_validation() {
        let series = vec![1.0; 10];
        let err =
            classify_series(&series, &TailParams { window: 2, tol: 1e-6, burn_in: 0 })
                .unwrap_err();
        assert!(matches!(err, TailError::WindowTooSmall(2)));
        let err =
            classify_series(&series, &TailParams { window: 8, tol: 1e-6, burn_in: 5 })
                .unwrap_err();
        assert!(matches!(err, TailError::WindowTooLarge { window: 8, available: 5 }));
    }

    #[test]
    fn classify_overflow_is_unbounded() {
        let series: Vec<f64> = (0..40).map(|n| (10.0f64).powi(n * 20)).collect();
        let r = classify_series(&series, &TailParams::default()).unwrap();
        assert_eq!(r.class, TailClass::Unbounded);
    }
}
