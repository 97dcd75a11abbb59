//! Sound three-valued checking of LCL formulas.
//!
//! `Γ(N) = Σ_i λ_i^N` over the eigenvalues of every sector transfer matrix.
//! Eigenvalues are grouped into modulus shells and their phases snapped to
//! low-order roots of unity, so on each residue class `N ≡ i (mod κ)` a
//! value expression becomes a finite sum `Σ_s σ_s(i) R_s^N` plus terms with
//! explicit bounds. The dominant nonzero shell fixes the eventual sign of
//! `v − c` for each interval endpoint `c`, certified from the first size at
//! which it beats the bound on everything below it. Sizes before that are
//! decided by direct evaluation of `Γ`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::TAU;
use core::fmt;

#[cfg_attr(test, allow(unused_imports))]
use thiserror::Error;

use crate::logic::{
    holds_label_tri, ChainModel, Formula, GammaTable, Label, Linear, LogicError, SizeRef, Tri,
    ValueExpr, TAU_BND,
};
use crate::matcore::C64;
use crate::mps::MpsError;
use crate::semilinear::{lcm, EvidenceApprox, SemilinearSet, MAX_MODULUS};
use crate::spectral::{
    decompose_with, DecomposeOptions, Decomposition, SpectralError, RADIUS_SLACK, SHELL_TOL,
    TAU_NIL,
};
#[allow(unused_imports)]
use num_traits::Float;

/// Coefficients at most this fraction of their magnitude scale are zero.
pub const TAU_ZERO: f64 = 1e-9;
/// Distance within which `λ/R` snaps to a root of unity.
pub const ROOT_TOL: f64 = 1e-8;
/// Largest root-of-unity order tried besides the component periods.
pub const MAX_ROOT_ORDER: u64 = 16;
/// Moduli within this distance of 1 snap to exactly 1.
pub const UNIT_SNAP: f64 = 1e-9;
/// Shells of `Γ` kept as explicit terms; the rest become bounds.
pub const EXPLICIT_SHELLS: usize = 4;
/// Nonzero shells examined per sign decision.
pub const MAX_CONSULTED: usize = 2;
/// Largest residue-class modulus a label may use.
pub const MAX_CLASS_MODULUS: u64 = 5040;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error("start size must be at least 1")]
    ZeroStart,
    #[error("cancelled")]
    Cancelled,
}

pub type Result<T> = core::result::Result<T, CheckError>;

/// Tuning knobs of a [`Checker`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Seed of the invariant-subspace search.
    pub seed: u64,
    /// Sizes below this are always decided by direct evaluation.
    pub n_direct: u64,
    /// Largest size evaluated directly.
    pub prefix_cap: u64,
    /// Largest certification threshold searched.
    pub threshold_cap: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: crate::spectral::DEFAULT_SEED,
            n_direct: 128,
            prefix_cap: 2048,
            threshold_cap: 1_000_000,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `x mod 1` in `[0, 1)`.
fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn same_radius(a: f64, b: f64) -> bool {
    (a - b).abs() <= SHELL_TOL * a.max(b)
}

/// Phase of a term: an exact root of unity `e^{2πij/q}` or a free angle in
/// turns.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Root { q: u64, j: u64 },
    Free(f64),
}

impl Phase {
    fn one() -> Phase {
        Phase::Root { q: 1, j: 0 }
    }

    fn turns(self) -> f64 {
        match self {
            Phase::Root { q, j } => j as f64 / q as f64,
            Phase::Free(t) => t,
        }
    }

    fn root(q: u64, j: u64) -> Phase {
        let g = gcd(q, j % q).max(1);
        Phase::Root {
            q: q / g,
            j: (j % q) / g,
        }
    }

    fn mul(self, other: Phase) -> Phase {
        match (self, other) {
            (Phase::Root { q: q1, j: j1 }, Phase::Root { q: q2, j: j2 }) => {
                let q = lcm(q1, q2);
                Phase::root(q, j1 * (q / q1) + j2 * (q / q2))
            }
            (a, b) => Phase::Free(frac(a.turns() + b.turns())),
        }
    }

    fn pow(self, n: u64) -> Phase {
        match self {
            Phase::Root { q, j } => Phase::root(q, (j * (n % q)) % q),
            Phase::Free(t) => Phase::Free(frac(t * n as f64)),
        }
    }

    fn same(self, other: Phase) -> bool {
        match (self, other) {
            (Phase::Root { q: a, j: b }, Phase::Root { q: c, j: d }) => a == c && b == d,
            (Phase::Free(a), Phase::Free(b)) => {
                let d = frac(a - b);
                d.min(1.0 - d) <= 1e-12
            }
            _ => false,
        }
    }

    fn unit(self) -> C64 {
        C64::from_polar(1.0, TAU * self.turns())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Base {
    radius: f64,
    phase: Phase,
}

impl Base {
    fn one() -> Base {
        Base {
            radius: 1.0,
            phase: Phase::one(),
        }
    }

    fn mul(self, other: Base) -> Base {
        Base {
            radius: snap_unit(self.radius * other.radius),
            phase: self.phase.mul(other.phase),
        }
    }

    fn pow(self, n: u64) -> C64 {
        self.phase.pow(n).unit() * self.radius.powf(n as f64)
    }

    fn same(self, other: Base) -> bool {
        same_radius(self.radius, other.radius) && self.phase.same(other.phase)
    }
}

fn snap_unit(r: f64) -> f64 {
    if (r - 1.0).abs() <= UNIT_SNAP {
        1.0
    } else {
        r
    }
}

/// `coef · base^N`, with `scale` the total magnitude of the contributions
/// merged into `coef`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    base: Base,
    coef: C64,
    scale: f64,
}

/// `|rest(N)| ≤ weight · radius^N` for `N ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bound {
    weight: f64,
    radius: f64,
}

/// Symbolic sequence: explicit exponential terms plus bounded remainder.
#[derive(Debug, Clone, Default, PartialEq)]
struct ExpSeq {
    terms: Vec<Term>,
    bounds: Vec<Bound>,
}

impl ExpSeq {
    fn constant(c: f64) -> ExpSeq {
        let mut e = ExpSeq::default();
        if c != 0.0 {
            e.push(Term {
                base: Base::one(),
                coef: C64::new(c, 0.0),
                scale: c.abs(),
            });
        }
        e
    }

    fn push(&mut self, t: Term) {
        if let Some(x) = self.terms.iter_mut().find(|x| x.base.same(t.base)) {
            x.coef += t.coef;
            x.scale += t.scale;
        } else {
            self.terms.push(t);
        }
    }

    fn push_bound(&mut self, b: Bound) {
        if b.weight <= 0.0 {
            return;
        }
        if let Some(x) = self.bounds.iter_mut().find(|x| x.radius == b.radius) {
            x.weight += b.weight;
        } else {
            self.bounds.push(b);
        }
    }

    fn add(&self, other: &ExpSeq) -> ExpSeq {
        let mut out = self.clone();
        for &t in &other.terms {
            out.push(t);
        }
        for &b in &other.bounds {
            out.push_bound(b);
        }
        out
    }

    fn scale(&self, c: f64) -> ExpSeq {
        let mut out = ExpSeq::default();
        if c == 0.0 {
            return out;
        }
        for t in &self.terms {
            out.push(Term {
                coef: t.coef * c,
                scale: t.scale * c.abs(),
                ..*t
            });
        }
        for b in &self.bounds {
            out.push_bound(Bound {
                weight: b.weight * c.abs(),
                ..*b
            });
        }
        out
    }

    /// `N ↦ self(N + o)`.
    fn shift(&self, o: u64) -> ExpSeq {
        let mut out = ExpSeq::default();
        for t in &self.terms {
            out.push(Term {
                coef: t.coef * t.base.pow(o),
                scale: t.scale * t.base.radius.powf(o as f64),
                ..*t
            });
        }
        for b in &self.bounds {
            out.push_bound(Bound {
                weight: b.weight * b.radius.powf(o as f64),
                ..*b
            });
        }
        out
    }

    fn mul(&self, other: &ExpSeq) -> ExpSeq {
        let mut out = ExpSeq::default();
        for a in &self.terms {
            for b in &other.terms {
                out.push(Term {
                    base: a.base.mul(b.base),
                    coef: a.coef * b.coef,
                    scale: a.scale * b.scale,
                });
            }
            for b in &other.bounds {
                out.push_bound(Bound {
                    weight: a.coef.norm().max(a.scale) * b.weight,
                    radius: a.base.radius * b.radius,
                });
            }
        }
        for a in &self.bounds {
            for b in &other.terms {
                out.push_bound(Bound {
                    weight: a.weight * b.coef.norm().max(b.scale),
                    radius: a.radius * b.base.radius,
                });
            }
            for b in &other.bounds {
                out.push_bound(Bound {
                    weight: a.weight * b.weight,
                    radius: a.radius * b.radius,
                });
            }
        }
        out
    }

    /// Orders of the root phases of terms with non-negligible coefficients.
    fn root_orders(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .terms
            .iter()
            .filter(|t| t.coef.norm() > TAU_ZERO * t.scale)
            .filter_map(|t| match t.base.phase {
                Phase::Root { q, .. } => Some(q),
                Phase::Free(_) => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Eventual sign of a sequence on one residue class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    /// Positive for every class member `≥ from`.
    Pos { from: u64 },
    Neg { from: u64 },
    /// Identically zero on the class.
    Zero,
    Unknown,
}

impl Sign {
    fn flip(self) -> Sign {
        match self {
            Sign::Pos { from } => Sign::Neg { from },
            Sign::Neg { from } => Sign::Pos { from },
            s => s,
        }
    }

    fn from(self) -> u64 {
        match self {
            Sign::Pos { from } | Sign::Neg { from } => from,
            _ => 1,
        }
    }
}

struct Shell<'a> {
    radius: f64,
    terms: Vec<&'a Term>,
}

fn shells(e: &ExpSeq) -> Vec<Shell<'_>> {
    let mut ts: Vec<&Term> = e.terms.iter().collect();
    ts.sort_by(|a, b| b.base.radius.partial_cmp(&a.base.radius).unwrap_or(core::cmp::Ordering::Equal));
    let mut out: Vec<Shell> = Vec::new();
    for t in ts {
        match out.last_mut() {
            Some(s) if same_radius(s.radius, t.base.radius) => s.terms.push(t),
            _ => out.push(Shell {
                radius: t.base.radius,
                terms: vec![t],
            }),
        }
    }
    out
}

/// `ln Σ_k exp(x_k)`.
fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Sign of `e` on `{N ≡ residue (mod κ), N ≥ 1}` with `residue ∈ 1..=κ`.
/// `offset` is the exact constant part of `e`; a unit shell that only
/// vanishes because the offset is below resolution cannot be skipped.
fn class_sign(e: &ExpSeq, kappa: u64, residue: u64, cap: u64, offset: f64) -> Sign {
    let sh = shells(e);
    let bound_radius = e.bounds.iter().map(|b| b.radius).fold(0.0, f64::max);
    let mut consulted = 0;
    for (idx, s) in sh.iter().enumerate() {
        let scale: f64 = s.terms.iter().map(|t| t.scale).sum();
        let mut sigma = C64::new(0.0, 0.0);
        let mut free = 0.0;
        for t in &s.terms {
            match t.base.phase {
                Phase::Root { .. } => sigma += t.coef * t.base.phase.pow(residue).unit(),
                Phase::Free(_) => {
                    if t.coef.norm() > TAU_ZERO * t.scale {
                        free += t.coef.norm();
                    }
                }
            }
        }
        let tol = TAU_ZERO * scale;
        if sigma.norm() <= tol && free <= tol {
            if s.radius == 1.0 && offset != 0.0 && offset.abs() <= tol {
                return Sign::Unknown;
            }
            continue;
        }
        consulted += 1;
        if consulted > MAX_CONSULTED || s.radius <= bound_radius {
            return Sign::Unknown;
        }
        let margin = sigma.re.abs() - sigma.im.abs() - free - tol;
        if margin <= 0.0 {
            // an aperiodic or cancelling shell only hides the next one
            // when it is exactly zero
            return Sign::Unknown;
        }
        let mut rest: Vec<(f64, f64)> = e.bounds.iter().map(|b| (b.weight.ln(), b.radius.ln())).collect();
        for lower in &sh[idx + 1..] {
            let w: f64 = lower.terms.iter().map(|t| t.coef.norm()).sum();
            if w > 0.0 {
                rest.push((w.ln(), lower.radius.ln()));
            }
        }
        let ln_r = s.radius.ln();
        let ok = |n: u64| {
            let xs: Vec<f64> = rest.iter().map(|(w, r)| w + n as f64 * r).collect();
            margin.ln() + n as f64 * ln_r > log_sum_exp(&xs)
        };
        if residue > cap || !ok(residue + kappa * ((cap - residue) / kappa)) {
            return Sign::Unknown;
        }
        let (mut lo, mut hi) = (0u64, (cap - residue) / kappa);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok(residue + kappa * mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let from = residue + kappa * lo;
        return if sigma.re > 0.0 {
            Sign::Pos { from }
        } else {
            Sign::Neg { from }
        };
    }
    if e.bounds.is_empty() {
        Sign::Zero
    } else {
        Sign::Unknown
    }
}

/// Outcome of a label on one residue class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassStatus {
    /// Holds for every class member from `from` on.
    In,
    /// Fails for every class member from `from` on.
    Out,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassOutcome {
    /// `N ≡ residue (mod κ)`, `residue ∈ 1..=κ`.
    pub residue: u64,
    pub status: ClassStatus,
    /// First size from which the status is certified.
    pub from: u64,
    /// Whether the status holds from the first member on without direct
    /// evaluation (identically constant value).
    pub exact: bool,
}

impl ClassOutcome {
    fn unknown(residue: u64) -> ClassOutcome {
        ClassOutcome {
            residue,
            status: ClassStatus::Unknown,
            from: 1,
            exact: false,
        }
    }
}

/// Per-label result: residue classes and the evidence-set bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicAnalysis {
    pub label: String,
    pub kappa: u64,
    pub classes: Vec<ClassOutcome>,
    /// Largest size evaluated directly.
    pub direct_horizon: u64,
    pub evidence: EvidenceApprox,
}

/// Spectral model of `Γ`: explicit terms for the leading shells.
#[derive(Debug, Clone)]
struct GammaModel {
    seq: ExpSeq,
    kappa: u64,
}

impl GammaModel {
    fn new(dec: &Decomposition) -> GammaModel {
        let mut vals: Vec<C64> = dec.sectors.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        let rho = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
        vals.retain(|z| z.norm() > TAU_NIL * rho);
        vals.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
        let mut orders: Vec<u64> = (1..=MAX_ROOT_ORDER).collect();
        for c in &dec.components {
            let p = c.period as u64;
            if p > MAX_ROOT_ORDER && !orders.contains(&p) {
                orders.push(p);
            }
        }
        // shells by modulus
        let mut groups: Vec<Vec<C64>> = Vec::new();
        for z in vals {
            match groups.last_mut() {
                Some(g) if same_radius(g[0].norm(), z.norm()) => g.push(z),
                _ => groups.push(vec![z]),
            }
        }
        let mut seq = ExpSeq::default();
        let mut prev_radius = f64::INFINITY;
        for (k, g) in groups.iter().enumerate() {
            let r = snap_unit(g.iter().map(|z| z.norm()).sum::<f64>() / g.len() as f64);
            if k < EXPLICIT_SHELLS {
                for z in g {
                    let phase = snap_phase(*z / z.norm(), &orders);
                    seq.push(Term {
                        base: Base { radius: r, phase },
                        coef: C64::new(1.0, 0.0),
                        scale: 1.0,
                    });
                }
            } else {
                let top = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
                seq.push_bound(Bound {
                    weight: g.len() as f64,
                    radius: (top * (1.0 + RADIUS_SLACK)).min(prev_radius * (1.0 - SHELL_TOL)),
                });
            }
            prev_radius = r;
        }
        for s in &dec.sectors {
            if let Some(rem) = s.remainder {
                seq.push_bound(Bound {
                    weight: rem.count as f64,
                    radius: rem.radius * (1.0 + RADIUS_SLACK),
                });
            }
        }
        GammaModel {
            seq,
            kappa: dec.kappa,
        }
    }
}

fn snap_phase(u: C64, orders: &[u64]) -> Phase {
    let turns = frac(u.arg() / TAU);
    for &q in orders {
        let j = ((turns * q as f64).round() as u64) % q;
        let w = C64::from_polar(1.0, TAU * j as f64 / q as f64);
        if (u - w).norm() <= ROOT_TOL {
            return Phase::root(q, j);
        }
    }
    Phase::Free(turns)
}

/// `T`, `F` or `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    True,
    False,
    Unknown,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::True => "T",
            VerdictKind::False => "F",
            VerdictKind::Unknown => "U",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub start: u64,
    pub evidence: EvidenceApprox,
    /// For `G φ` refuted, the first size at which `φ` certainly fails; for
    /// `E φ` confirmed, the first size at which `φ` certainly holds.
    pub witness: Option<u64>,
}

/// Holds a model, its decomposition, and memoized evidence sets.
pub struct Checker {
    model: ChainModel,
    dec: Decomposition,
    gamma: GammaModel,
    opts: CheckOptions,
    direct: RefCell<GammaTable>,
    memo: RefCell<BTreeMap<Formula, EvidenceApprox>>,
    atoms: RefCell<BTreeMap<String, AtomicAnalysis>>,
    cancel: Option<Box<dyn Fn() -> bool + Send>>,
}

impl fmt::Debug for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Checker")
            .field("family", &self.model.family().name())
            .field("components", &self.dec.components.len())
            .field("opts", &self.opts)
            .finish()
    }
}

impl Checker {
    pub fn new(model: ChainModel, opts: CheckOptions) -> Result<Self> {
        let dec = decompose_with(model.family().kraus(), DecomposeOptions { seed: opts.seed })?;
        let gamma = GammaModel::new(&dec);
        Ok(Checker {
            model,
            dec,
            gamma,
            opts,
            direct: RefCell::new(GammaTable::new(Vec::new())),
            memo: RefCell::new(BTreeMap::new()),
            atoms: RefCell::new(BTreeMap::new()),
            cancel: None,
        })
    }

    /// Installs a predicate polled between steps; when it returns `true`
    /// the check stops with [`CheckError::Cancelled`].
    pub fn with_cancel(mut self, f: impl Fn() -> bool + Send + 'static) -> Self {
        self.cancel = Some(Box::new(f));
        self
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.dec
    }

    pub fn options(&self) -> &CheckOptions {
        &self.opts
    }

    fn poll(&self) -> Result<()> {
        match &self.cancel {
            Some(f) if f() => Err(CheckError::Cancelled),
            _ => Ok(()),
        }
    }

    /// Makes `Γ(1..=len)` available from direct evaluation.
    fn ensure_direct(&self, len: u64) -> Result<()> {
        let have = self.direct.borrow().len();
        if have >= len {
            return Ok(());
        }
        let want = len.max(2 * have).max(self.opts.n_direct + 1);
        let vals = self.model.family().norm_sq_range(want)?;
        *self.direct.borrow_mut() = GammaTable::new(vals);
        Ok(())
    }

    fn direct_value(&self, n: u64) -> Result<f64> {
        self.ensure_direct(n)?;
        Ok(self.direct.borrow().values()[(n - 1) as usize])
    }

    fn linear_seq(&self, l: &Linear) -> Result<ExpSeq> {
        let mut out = ExpSeq::constant(l.constant);
        for &(c, r) in &l.terms {
            let part = match r {
                SizeRef::Offset(o) => self.gamma.seq.shift(o as u64).scale(c),
                SizeRef::Fixed(j) => ExpSeq::constant(c * self.direct_value(j)?),
            };
            out = out.add(&part);
        }
        Ok(out)
    }

    /// Per-class outcome of `label` from its spectral model.
    fn label_classes(&self, lbl: &Label) -> Result<(u64, Vec<ClassOutcome>)> {
        let iv = lbl.interval();
        let cap = self.opts.threshold_cap;
        // per endpoint: exact constant offset, lower-endpoint flag, and the
        // sequence whose sign decides the side
        let (den, queries): (Option<ExpSeq>, Vec<(f64, bool, ExpSeq)>) = match lbl.expr() {
            ValueExpr::Linear(l) => {
                let v = self.linear_seq(l)?;
                let q = endpoint_list(iv)
                    .into_iter()
                    .map(|(c, lower)| (-c, lower, v.add(&ExpSeq::constant(-c))))
                    .collect();
                (None, q)
            }
            ValueExpr::Product(a, b) => {
                let v = self.linear_seq(a)?.mul(&self.linear_seq(b)?);
                let q = endpoint_list(iv)
                    .into_iter()
                    .map(|(c, lower)| (-c, lower, v.add(&ExpSeq::constant(-c))))
                    .collect();
                (None, q)
            }
            ValueExpr::Ratio(a, b) => {
                let num = self.linear_seq(a)?;
                let den = self.linear_seq(b)?;
                let q = endpoint_list(iv)
                    .into_iter()
                    .map(|(c, lower)| (0.0, lower, num.add(&den.scale(-c))))
                    .collect();
                (Some(den), q)
            }
        };
        let mut kappa = self.gamma.kappa.max(1);
        for (_, _, s) in &queries {
            for q in s.root_orders() {
                kappa = lcm(kappa, q);
            }
        }
        if let Some(d) = &den {
            for q in d.root_orders() {
                kappa = lcm(kappa, q);
            }
        }
        if kappa > MAX_CLASS_MODULUS {
            return Ok((1, vec![ClassOutcome::unknown(1)]));
        }
        let mut classes = Vec::with_capacity(kappa as usize);
        for residue in 1..=kappa {
            self.poll()?;
            let den_sign = den.as_ref().map(|d| class_sign(d, kappa, residue, cap, 0.0));
            let outcome = if matches!(den_sign, Some(Sign::Zero) | Some(Sign::Unknown)) {
                ClassOutcome::unknown(residue)
            } else {
                let sides: Vec<Option<Side>> = queries
                    .iter()
                    .map(|(offset, lower, seq)| {
                        let raw = class_sign(seq, kappa, residue, cap, *offset);
                        side_of(raw, den_sign, *lower, iv)
                    })
                    .collect();
                combine_sides(residue, &sides)
            };
            classes.push(if lbl.is_negated() { negate_outcome(outcome) } else { outcome });
        }
        Ok((kappa, classes))
    }

    /// Per-label analysis with its evidence-set bounds.
    pub fn atomic(&self, name: &str) -> Result<AtomicAnalysis> {
        if let Some(a) = self.atoms.borrow().get(name) {
            return Ok(a.clone());
        }
        let lbl = self.model.label(name)?.clone();
        let (kappa, mut classes) = self.label_classes(&lbl)?;
        let nd = self.opts.n_direct.max(1);
        let pcap = self.opts.prefix_cap.max(nd);
        // sizes below `start_of` are evaluated directly (up to the cap)
        let start_of = |c: &ClassOutcome| -> u64 {
            match c.status {
                ClassStatus::Unknown => u64::MAX,
                _ if c.exact => 1,
                _ => c.from.max(nd),
            }
        };
        let horizon = classes
            .iter()
            .filter(|c| c.status != ClassStatus::Unknown)
            .map(|c| start_of(c).saturating_sub(1).min(pcap))
            .max()
            .unwrap_or(0)
            .max(nd);
        self.ensure_direct(lbl.expr().max_size(horizon))?;
        let direct = self.direct.borrow();
        let mut tri = Vec::with_capacity(horizon as usize);
        for n in 1..=horizon {
            if n % 256 == 0 {
                self.poll()?;
            }
            tri.push(holds_label_tri(&*direct, &lbl, n, TAU_BND)?);
        }
        drop(direct);
        // decided-in classes: the whole class in Ω⁺, direct prefix plus
        // certified tail in Ω⁻; decided-out classes: direct prefix only;
        // indecisive classes: Ω⁺ only
        let class_of = |n: u64| &classes[((n - 1) % kappa) as usize];
        let prefix = |n: u64| -> Tri {
            if n <= horizon {
                tri[(n - 1) as usize]
            } else {
                Tri::Unknown
            }
        };
        let in_under = |n: u64| -> bool {
            let c = class_of(n);
            match c.status {
                ClassStatus::Unknown => false,
                ClassStatus::In if n >= start_of(c) => true,
                ClassStatus::Out if n >= start_of(c) => false,
                _ => prefix(n) == Tri::True,
            }
        };
        let in_over = |n: u64| -> bool {
            let c = class_of(n);
            match c.status {
                ClassStatus::Unknown | ClassStatus::In => true,
                ClassStatus::Out if n >= start_of(c) => false,
                ClassStatus::Out => prefix(n) != Tri::False,
            }
        };
        let mut t_under = 1u64;
        let mut t_over = 1u64;
        for c in &classes {
            let s = start_of(c);
            match c.status {
                ClassStatus::In => t_under = t_under.max(s),
                ClassStatus::Out => {
                    t_under = t_under.max(s.min(horizon + 1));
                    t_over = t_over.max(s);
                }
                ClassStatus::Unknown => {}
            }
        }
        let build = |t: u64, keep: &dyn Fn(u64) -> bool| -> SemilinearSet {
            let finite: Vec<u64> = (1..t).filter(|&n| keep(n)).collect();
            let residues = (t..t + kappa).filter(|&n| keep(n)).collect::<Vec<_>>();
            SemilinearSet::from_parts(finite, kappa, t, residues)
        };
        let under = build(t_under, &in_under);
        let over = build(t_over, &in_over);
        for c in classes.iter_mut() {
            if c.status == ClassStatus::Unknown {
                c.from = horizon + 1;
            }
        }
        let a = AtomicAnalysis {
            label: name.to_string(),
            kappa,
            classes,
            direct_horizon: horizon,
            evidence: EvidenceApprox::new(over, under),
        };
        self.atoms.borrow_mut().insert(name.to_string(), a.clone());
        Ok(a)
    }

    /// `(Ω⁺, Ω⁻)` for `f` by structural recursion with memoization.
    pub fn evidence(&self, f: &Formula) -> Result<EvidenceApprox> {
        if let Some(e) = self.memo.borrow().get(f) {
            return Ok(e.clone());
        }
        self.poll()?;
        let e = match f {
            Formula::True => EvidenceApprox::exact(SemilinearSet::universe()),
            Formula::Label(n) => self.atomic(n)?.evidence,
            Formula::Not(g) => self.evidence(g)?.negate(),
            Formula::And(a, b) => {
                let x = self.evidence(a)?;
                let y = self.evidence(b)?;
                combine_checked(&x, &y)?
            }
            Formula::Next(g) => self.evidence(g)?.shift_down(1),
            Formula::Eventually(g) => {
                let x = self.evidence(g)?;
                EvidenceApprox::new(eventually(&x.over), eventually(&x.under))
            }
            Formula::Globally(g) => {
                let x = self.evidence(g)?.negate();
                EvidenceApprox::new(eventually(&x.over), eventually(&x.under)).negate()
            }
        };
        self.memo.borrow_mut().insert(f.clone(), e.clone());
        Ok(e)
    }

    pub fn check(&self, f: &Formula) -> Result<Verdict> {
        self.check_at(f, 1)
    }

    /// Verdict at `start`: `T` if `start ∈ Ω⁻`, `F` if `start ∉ Ω⁺`.
    pub fn check_at(&self, f: &Formula, start: u64) -> Result<Verdict> {
        if start == 0 {
            return Err(CheckError::ZeroStart);
        }
        self.model.resolve(f)?;
        let evidence = self.evidence(f)?;
        let kind = if evidence.under.contains(start) {
            VerdictKind::True
        } else if !evidence.over.contains(start) {
            VerdictKind::False
        } else {
            VerdictKind::Unknown
        };
        let witness = self.witness(f, start, kind)?;
        Ok(Verdict {
            kind,
            start,
            evidence,
            witness,
        })
    }

    fn witness(&self, f: &Formula, start: u64, kind: VerdictKind) -> Result<Option<u64>> {
        let mut cur = f;
        let mut at = start;
        while let Formula::Next(g) = cur {
            cur = g;
            at += 1;
        }
        Ok(match (cur, kind) {
            (Formula::Globally(g), VerdictKind::False) => {
                let e = self.evidence(g)?;
                first_at_least(&e.over.complement(), at)
            }
            (Formula::Eventually(g), VerdictKind::True) => {
                let e = self.evidence(g)?;
                first_at_least(&e.under, at)
            }
            _ => None,
        })
    }
}

fn first_at_least(s: &SemilinearSet, n: u64) -> Option<u64> {
    if let Some(&x) = s.finite_part().iter().find(|&&x| x >= n) {
        return Some(x);
    }
    if s.is_finite() {
        return None;
    }
    let from = n.max(s.threshold());
    (from..from + s.modulus()).find(|&m| s.contains(m))
}

fn combine_checked(x: &EvidenceApprox, y: &EvidenceApprox) -> Result<EvidenceApprox> {
    let k = lcm(x.over.modulus(), y.over.modulus()).max(lcm(x.under.modulus(), y.under.modulus()));
    if k > MAX_MODULUS {
        return Ok(EvidenceApprox::unknown());
    }
    Ok(x.and(y))
}

/// `{n : ∃ m ≥ n, m ∈ S}`.
fn eventually(s: &SemilinearSet) -> SemilinearSet {
    if s.is_empty() {
        SemilinearSet::empty()
    } else if !s.is_finite() {
        SemilinearSet::universe()
    } else {
        SemilinearSet::range(1, s.finite_part().last().copied().unwrap_or(0))
    }
}

/// Whether a class lies inside the interval on one endpoint's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Side {
    inside: bool,
    from: u64,
    exact: bool,
}

fn side_of(raw: Sign, den: Option<Sign>, lower: bool, iv: &crate::logic::IntervalPredicate) -> Option<Side> {
    let exact = raw == Sign::Zero && den.is_none();
    let mut s = raw;
    if let Some(ds) = den {
        if matches!(ds, Sign::Neg { .. }) {
            s = s.flip();
        }
        s = match s {
            Sign::Pos { from } => Sign::Pos { from: from.max(ds.from()) },
            Sign::Neg { from } => Sign::Neg { from: from.max(ds.from()) },
            z => z,
        };
    }
    let den_from = den.map_or(1, |d| d.from());
    let (inside, from) = match (s, lower) {
        (Sign::Pos { from }, true) | (Sign::Neg { from }, false) => (true, from),
        (Sign::Pos { from }, false) | (Sign::Neg { from }, true) => (false, from),
        (Sign::Zero, true) => (!iv.lower_open, den_from),
        (Sign::Zero, false) => (!iv.upper_open, den_from),
        (Sign::Unknown, _) => return None,
    };
    Some(Side { inside, from, exact })
}

fn combine_sides(residue: u64, sides: &[Option<Side>]) -> ClassOutcome {
    let outs: Vec<&Side> = sides.iter().flatten().filter(|s| !s.inside).collect();
    if !outs.is_empty() {
        let exact = outs.iter().any(|s| s.exact);
        let from = if exact { 1 } else { outs.iter().map(|s| s.from).min().unwrap_or(1) };
        return ClassOutcome {
            residue,
            status: ClassStatus::Out,
            from,
            exact,
        };
    }
    if sides.iter().any(|s| s.is_none()) {
        return ClassOutcome::unknown(residue);
    }
    let ins: Vec<&Side> = sides.iter().flatten().collect();
    ClassOutcome {
        residue,
        status: ClassStatus::In,
        from: ins.iter().map(|s| s.from).max().unwrap_or(1),
        exact: ins.iter().all(|s| s.exact),
    }
}

fn endpoint_list(iv: &crate::logic::IntervalPredicate) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    if iv.lower.is_finite() {
        out.push((iv.lower, true));
    }
    if iv.upper.is_finite() {
        out.push((iv.upper, false));
    }
    out
}

fn negate_outcome(c: ClassOutcome) -> ClassOutcome {
    ClassOutcome {
        status: match c.status {
            ClassStatus::In => ClassStatus::Out,
            ClassStatus::Out => ClassStatus::In,
            ClassStatus::Unknown => ClassStatus::Unknown,
        },
        ..c
    }
}

/// Free-function form of [`Checker::evidence`].
pub fn check_all(checker: &Checker, f: &Formula) -> Result<EvidenceApprox> {
    checker.evidence(f)
}

/// Human-readable summary of an analysis, one line per class.
pub fn describe(a: &AtomicAnalysis) -> String {
    let mut s = format!("{} (κ = {}):", a.label, a.kappa);
    for c in &a.classes {
        let st = match c.status {
            ClassStatus::In => "in",
            ClassStatus::Out => "out",
            ClassStatus::Unknown => "?",
        };
        s.push_str(&format!(" [{} mod {}: {} from {}]", c.residue % a.kappa, a.kappa, st, c.from));
    }
    s
}
