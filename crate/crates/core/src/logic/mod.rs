//! Linear Chain Logic: value expressions over squared norms, interval
//! labels, formulas, and a bounded evaluator used as an oracle.

mod parse;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::mps::{MpsError, MpsFamily};

pub use parse::{parse_expr, parse_formula, parse_interval};

/// Largest `o` allowed in `val(N+o)`.
pub const MAX_OFFSET: u32 = 16;
/// Denominators at most this large in magnitude are a division error.
pub const TAU_DIV: f64 = 1e-12;
/// Values this close to a finite interval endpoint are undecided.
pub const TAU_BND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("label `{0}` declared twice")]
    DuplicateLabel(String),
    #[error("denominator {value:e} at size {n} is too close to zero")]
    Division { n: u64, value: f64 },
    #[error("size {0} is out of range")]
    SizeOutOfRange(u64),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("offset {0} exceeds the maximum of {MAX_OFFSET}")]
    OffsetTooLarge(u32),
    #[error("invalid expression: {0}")]
    InvalidExpr(String),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

pub type Result<T> = core::result::Result<T, LogicError>;

/// Three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    pub fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        }
    }

    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }

    pub fn is_definite(self) -> bool {
        self != Tri::Unknown
    }
}

/// Which squared norm a term refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SizeRef {
    /// `val_j` for a constant size `j ≥ 1`.
    Fixed(u64),
    /// `val_{N+o}`.
    Offset(u32),
}

impl SizeRef {
    pub fn resolve(self, n: u64) -> u64 {
        match self {
            SizeRef::Fixed(j) => j,
            SizeRef::Offset(o) => n + o as u64,
        }
    }
}

/// `c₀ + Σ c_i · val(ref_i)` with merged, nonzero terms in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub constant: f64,
    pub terms: Vec<(f64, SizeRef)>,
}

impl Linear {
    pub fn constant(c: f64) -> Linear {
        Linear {
            constant: c,
            terms: Vec::new(),
        }
    }

    /// `val(N+o)`.
    pub fn val(o: u32) -> Linear {
        Linear {
            constant: 0.0,
            terms: vec![(1.0, SizeRef::Offset(o))],
        }
    }

    /// `val(j)`.
    pub fn fixed(j: u64) -> Linear {
        Linear {
            constant: 0.0,
            terms: vec![(1.0, SizeRef::Fixed(j))],
        }
    }

    fn normalized(mut self) -> Linear {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(f64, SizeRef)> = Vec::with_capacity(self.terms.len());
        for (c, r) in self.terms {
            match merged.last_mut() {
                Some(last) if last.1 == r => last.0 += c,
                _ => merged.push((c, r)),
            }
        }
        merged.retain(|t| t.0 != 0.0);
        self.terms = merged;
        self
    }

    pub fn add(&self, other: &Linear) -> Linear {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Linear {
            constant: self.constant + other.constant,
            terms,
        }
        .normalized()
    }

    pub fn sub(&self, other: &Linear) -> Linear {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Linear {
        Linear {
            constant: self.constant * s,
            terms: self.terms.iter().map(|(c, r)| (c * s, *r)).collect(),
        }
        .normalized()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_offset(&self) -> u32 {
        self.terms
            .iter()
            .filter_map(|(_, r)| match r {
                SizeRef::Offset(o) => Some(*o),
                SizeRef::Fixed(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest size `N + o` or `j` referenced when evaluated at `n`.
    pub fn max_size(&self, n: u64) -> u64 {
        self.terms
            .iter()
            .map(|(_, r)| r.resolve(n))
            .max()
            .unwrap_or(n)
    }

    pub fn eval(&self, n: u64, src: &dyn NormSource) -> Result<f64> {
        let mut acc = self.constant;
        for (c, r) in &self.terms {
            acc += c * src.gamma(r.resolve(n))?;
        }
        Ok(acc)
    }

    fn validate(&self) -> Result<()> {
        for (_, r) in &self.terms {
            match *r {
                SizeRef::Offset(o) if o > MAX_OFFSET => return Err(LogicError::OffsetTooLarge(o)),
                SizeRef::Fixed(0) => return Err(LogicError::SizeOutOfRange(0)),
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, r) in &self.terms {
            let name = match r {
                SizeRef::Fixed(j) => format!("val({j})"),
                SizeRef::Offset(0) => "val(N)".to_string(),
                SizeRef::Offset(o) => format!("val(N+{o})"),
            };
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1.0 {
                f.write_str(&name)?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0.0 {
            let (sign, mag) = if self.constant < 0.0 {
                ("-", -self.constant)
            } else {
                ("+", self.constant)
            };
            write!(f, " {sign} {mag}")?;
        }
        Ok(())
    }
}

/// A value expression over squared norms.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueExpr {
    Linear(Linear),
    /// numerator / denominator
    Ratio(Linear, Linear),
    Product(Linear, Linear),
}

impl From<Linear> for ValueExpr {
    fn from(l: Linear) -> Self {
        ValueExpr::Linear(l)
    }
}

impl ValueExpr {
    pub fn ratio(num: Linear, den: Linear) -> Result<ValueExpr> {
        if den.is_constant() && den.constant == 0.0 {
            return Err(LogicError::InvalidExpr("zero denominator".into()));
        }
        Ok(ValueExpr::Ratio(num, den))
    }

    pub fn product(a: Linear, b: Linear) -> ValueExpr {
        ValueExpr::Product(a, b)
    }

    pub fn parts(&self) -> Vec<&Linear> {
        match self {
            ValueExpr::Linear(l) => vec![l],
            ValueExpr::Ratio(a, b) | ValueExpr::Product(a, b) => vec![a, b],
        }
    }

    pub fn max_offset(&self) -> u32 {
        self.parts().iter().map(|l| l.max_offset()).max().unwrap_or(0)
    }

    pub fn max_size(&self, n: u64) -> u64 {
        self.parts().iter().map(|l| l.max_size(n)).max().unwrap_or(n)
    }

    pub fn validate(&self) -> Result<()> {
        for l in self.parts() {
            l.validate()?;
        }
        Ok(())
    }

    /// Evaluates at size `n`; near-zero denominators are an error.
    pub fn eval(&self, n: u64, src: &dyn NormSource) -> Result<f64> {
        if n == 0 {
            return Err(LogicError::SizeOutOfRange(0));
        }
        match self {
            ValueExpr::Linear(l) => l.eval(n, src),
            ValueExpr::Ratio(a, b) => {
                let den = b.eval(n, src)?;
                if den.abs() <= TAU_DIV {
                    return Err(LogicError::Division { n, value: den });
                }
                Ok(a.eval(n, src)? / den)
            }
            ValueExpr::Product(a, b) => Ok(a.eval(n, src)? * b.eval(n, src)?),
        }
    }
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpr::Linear(l) => write!(f, "{l}"),
            ValueExpr::Ratio(a, b) => write!(f, "({a}) / ({b})"),
            ValueExpr::Product(a, b) => write!(f, "({a}) * ({b})"),
        }
    }
}

/// Interval with optional infinite and open/closed endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPredicate {
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl IntervalPredicate {
    pub fn new(lower: f64, upper: f64, lower_open: bool, upper_open: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(LogicError::InvalidInterval("NaN endpoint".into()));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(LogicError::InvalidInterval("endpoint on the wrong side".into()));
        }
        let lower_open = lower_open || lower.is_infinite();
        let upper_open = upper_open || upper.is_infinite();
        if lower > upper {
            return Err(LogicError::InvalidInterval(format!("{lower} > {upper}")));
        }
        if lower == upper && (lower_open || upper_open) {
            return Err(LogicError::InvalidInterval(
                "a degenerate interval must be closed".into(),
            ));
        }
        Ok(IntervalPredicate {
            lower,
            upper,
            lower_open,
            upper_open,
        })
    }

    /// `(a, b)`; panics on invalid bounds.
    pub fn open(a: f64, b: f64) -> Self {
        Self::new(a, b, true, true).expect("valid open interval")
    }

    /// `[a, b]`; panics on invalid bounds.
    pub fn closed(a: f64, b: f64) -> Self {
        Self::new(a, b, false, false).expect("valid closed interval")
    }

    pub fn contains(&self, v: f64) -> bool {
        let lo = if self.lower_open {
            v > self.lower
        } else {
            v >= self.lower
        };
        let hi = if self.upper_open {
            v < self.upper
        } else {
            v <= self.upper
        };
        lo && hi
    }

    /// Distance from `v` to the nearest finite endpoint.
    pub fn boundary_distance(&self, v: f64) -> f64 {
        let mut d = f64::INFINITY;
        if self.lower.is_finite() {
            d = d.min((v - self.lower).abs());
        }
        if self.upper.is_finite() {
            d = d.min((v - self.upper).abs());
        }
        d
    }

    /// Membership, undecided within `tol` of an endpoint.
    pub fn classify(&self, v: f64, tol: f64) -> Tri {
        if !v.is_finite() && v.is_nan() {
            return Tri::Unknown;
        }
        if self.boundary_distance(v) <= tol {
            Tri::Unknown
        } else {
            Tri::from_bool(self.contains(v))
        }
    }

    /// Finite endpoints with the side on which membership holds.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.lower.is_finite() {
            out.push(self.lower);
        }
        if self.upper.is_finite() && self.upper != self.lower {
            out.push(self.upper);
        }
        out
    }
}

impl fmt::Display for IntervalPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = |x: f64| {
            if x == f64::INFINITY {
                "inf".to_string()
            } else if x == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{x}")
            }
        };
        write!(
            f,
            "{}{}, {}{}",
            if self.lower_open { '(' } else { '[' },
            num(self.lower),
            num(self.upper),
            if self.upper_open { ')' } else { ']' }
        )
    }
}

/// An atomic proposition `expr ∈ interval`, or `expr ∉ interval` when
/// negated.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    name: String,
    expr: ValueExpr,
    interval: IntervalPredicate,
    negate: bool,
}

impl Label {
    pub fn new(name: impl Into<String>, expr: impl Into<ValueExpr>, interval: IntervalPredicate) -> Self {
        Label {
            name: name.into(),
            expr: expr.into(),
            interval,
            negate: false,
        }
    }

    /// `expr ∉ interval`.
    pub fn outside(
        name: impl Into<String>,
        expr: impl Into<ValueExpr>,
        interval: IntervalPredicate,
    ) -> Self {
        Label {
            negate: true,
            ..Label::new(name, expr, interval)
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expr(&self) -> &ValueExpr {
        &self.expr
    }

    pub fn interval(&self) -> &IntervalPredicate {
        &self.interval
    }

    pub fn is_negated(&self) -> bool {
        self.negate
    }

    /// Exact membership of a value.
    pub fn holds_value(&self, v: f64) -> bool {
        self.interval.contains(v) != self.negate
    }

    /// Membership with the boundary tolerance.
    pub fn classify_value(&self, v: f64, tol: f64) -> Tri {
        let t = self.interval.classify(v, tol);
        if self.negate {
            t.not()
        } else {
            t
        }
    }
}

/// Source of squared norms `Γ(n)`.
pub trait NormSource {
    fn gamma(&self, n: u64) -> Result<f64>;
}

impl NormSource for MpsFamily {
    fn gamma(&self, n: u64) -> Result<f64> {
        Ok(self.norm_sq(n)?)
    }
}

/// Precomputed `Γ(1..=len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    values: Vec<f64>,
}

impl GammaTable {
    pub fn new(values: Vec<f64>) -> Self {
        GammaTable { values }
    }

    pub fn compute(family: &MpsFamily, len: u64) -> Result<Self> {
        Ok(GammaTable {
            values: family.norm_sq_range(len)?,
        })
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl NormSource for GammaTable {
    fn gamma(&self, n: u64) -> Result<f64> {
        if n == 0 || n > self.len() {
            return Err(LogicError::SizeOutOfRange(n));
        }
        Ok(self.values[(n - 1) as usize])
    }
}

/// An LCL formula over declared labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    Label(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Globally(Box<Formula>),
}

impl Formula {
    pub fn label(name: &str) -> Formula {
        Formula::Label(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// `¬(¬a ∧ ¬b)`.
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `¬(a ∧ ¬b)`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn next_k(mut f: Formula, k: u32) -> Formula {
        for _ in 0..k {
            f = Formula::next(f);
        }
        f
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn globally(f: Formula) -> Formula {
        Formula::Globally(Box::new(f))
    }

    /// Distinct label names, in first-occurrence order.
    pub fn label_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<String>) {
        match self {
            Formula::True => {}
            Formula::Label(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) | Formula::Globally(f) => {
                f.collect_labels(out)
            }
            Formula::And(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::Label(_) => 1,
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) | Formula::Globally(f) => {
                1 + f.size()
            }
            Formula::And(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Concrete syntax that parses back to this AST.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    fn render_into(&self, s: &mut String) {
        match self {
            Formula::And(a, b) => {
                a.render_into(s);
                s.push_str(" & ");
                b.render_operand(s, true);
            }
            _ => self.render_operand(s, false),
        }
    }

    fn render_operand(&self, s: &mut String, wrap_and: bool) {
        match self {
            Formula::True => s.push_str("true"),
            Formula::Label(n) => s.push_str(n),
            Formula::And(..) => {
                if wrap_and {
                    s.push('(');
                    self.render_into(s);
                    s.push(')');
                } else {
                    self.render_into(s);
                }
            }
            Formula::Not(f) => {
                s.push('!');
                f.render_operand(s, true);
            }
            Formula::Next(_) => {
                let mut k = 0;
                let mut cur = self;
                while let Formula::Next(inner) = cur {
                    k += 1;
                    cur = inner;
                }
                if k == 1 {
                    s.push_str("X ");
                } else {
                    s.push_str(&format!("X^{k} "));
                }
                cur.render_operand(s, true);
            }
            Formula::Eventually(f) => {
                s.push_str("E ");
                f.render_operand(s, true);
            }
            Formula::Globally(f) => {
                s.push_str("G ");
                f.render_operand(s, true);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A family together with its label table.
#[derive(Debug, Clone)]
pub struct ChainModel {
    family: MpsFamily,
    labels: BTreeMap<String, Label>,
}

impl ChainModel {
    pub fn new(family: MpsFamily, labels: Vec<Label>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for l in labels {
            l.expr.validate()?;
            let name = l.name.clone();
            if table.insert(name.clone(), l).is_some() {
                return Err(LogicError::DuplicateLabel(name));
            }
        }
        Ok(ChainModel {
            family,
            labels: table,
        })
    }

    pub fn family(&self) -> &MpsFamily {
        &self.family
    }

    pub fn label(&self, name: &str) -> Result<&Label> {
        self.labels
            .get(name)
            .ok_or_else(|| LogicError::UnknownLabel(name.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.labels.values()
    }

    /// Checks that every label of `f` is declared.
    pub fn resolve(&self, f: &Formula) -> Result<()> {
        for n in f.label_names() {
            self.label(&n)?;
        }
        Ok(())
    }

    pub fn max_offset(&self) -> u32 {
        self.labels.values().map(|l| l.expr.max_offset()).max().unwrap_or(0)
    }
}

pub fn eval_expr(model: &ChainModel, e: &ValueExpr, n: u64) -> Result<f64> {
    e.eval(n, &model.family)
}

/// Exact label semantics at size `n`.
pub fn holds_label(model: &ChainModel, lbl: &Label, n: u64) -> Result<bool> {
    Ok(lbl.holds_value(eval_expr(model, lbl.expr(), n)?))
}

/// Label semantics that reports `Unknown` near interval endpoints and for
/// near-zero denominators.
pub fn holds_label_tri(src: &dyn NormSource, lbl: &Label, n: u64, tol: f64) -> Result<Tri> {
    match lbl.expr().eval(n, src) {
        Ok(v) => Ok(lbl.classify_value(v, tol)),
        Err(LogicError::Division { .. }) => Ok(Tri::Unknown),
        Err(e) => Err(e),
    }
}

/// Bounded three-valued truth of `f` at every size `1..=horizon`.
pub fn eval_bounded_all(model: &ChainModel, f: &Formula, horizon: u64) -> Result<Vec<Tri>> {
    model.resolve(f)?;
    let table = GammaTable::compute(&model.family, horizon + model.max_offset() as u64)?;
    eval_bounded_with(model, &table, f, horizon)
}

/// As [`eval_bounded_all`] with a caller-supplied norm table.
pub fn eval_bounded_with(
    model: &ChainModel,
    src: &dyn NormSource,
    f: &Formula,
    horizon: u64,
) -> Result<Vec<Tri>> {
    let h = horizon as usize;
    let out = match f {
        Formula::True => vec![Tri::True; h],
        Formula::Label(name) => {
            let lbl = model.label(name)?;
            (1..=horizon)
                .map(|n| match lbl.expr().eval(n, src) {
                    Ok(v) => Ok(Tri::from_bool(lbl.holds_value(v))),
                    Err(LogicError::Division { .. }) => Ok(Tri::Unknown),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?
        }
        Formula::Not(g) => eval_bounded_with(model, src, g, horizon)?
            .into_iter()
            .map(Tri::not)
            .collect(),
        Formula::And(a, b) => {
            let va = eval_bounded_with(model, src, a, horizon)?;
            let vb = eval_bounded_with(model, src, b, horizon)?;
            va.into_iter().zip(vb).map(|(x, y)| x.and(y)).collect()
        }
        Formula::Next(g) => {
            let v = eval_bounded_with(model, src, g, horizon)?;
            (0..h)
                .map(|i| if i + 1 < h { v[i + 1] } else { Tri::Unknown })
                .collect()
        }
        Formula::Eventually(g) => {
            let v = eval_bounded_with(model, src, g, horizon)?;
            let mut out = vec![Tri::Unknown; h];
            let mut seen = false;
            for i in (0..h).rev() {
                seen |= v[i] == Tri::True;
                if seen {
                    out[i] = Tri::True;
                }
            }
            out
        }
        Formula::Globally(g) => {
            let v = eval_bounded_with(model, src, g, horizon)?;
            let mut out = vec![Tri::Unknown; h];
            let mut seen = false;
            for i in (0..h).rev() {
                seen |= v[i] == Tri::False;
                if seen {
                    out[i] = Tri::False;
                }
            }
            out
        }
    };
    Ok(out)
}

/// Bounded three-valued truth of `f` at size `n`.
pub fn eval_bounded(model: &ChainModel, f: &Formula, n: u64, horizon: u64) -> Result<Tri> {
    if n == 0 || n > horizon {
        return Err(LogicError::SizeOutOfRange(n));
    }
    Ok(eval_bounded_all(model, f, horizon)?[(n - 1) as usize])
}
