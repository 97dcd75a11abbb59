//! Synthetic channel families, tensor-power lifting, reference instances and
//! the standard formula suite.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg_attr(test, allow(unused_imports))]
use thiserror::Error;

use crate::logic::{Formula, IntervalPredicate, Label, Linear, LogicError, ValueExpr};
use crate::matcore::{CMatrix, C64, ONE, ZERO};
use crate::mps::{KrausSet, MpsError, MpsFamily};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest lift exponent accepted (`D = 2^t ≤ 128`).
pub const MAX_LIFT: u32 = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown formula `{0}`")]
    UnknownFormula(String),
    #[error("lift exponent {0} outside 1..={MAX_LIFT}")]
    BadLift(u32),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyName {
    Aklt,
    Cluster,
    RandomGapped,
    NearCritical,
    Periodic,
}

impl FamilyName {
    pub const ALL: [FamilyName; 5] = [
        FamilyName::Aklt,
        FamilyName::Cluster,
        FamilyName::RandomGapped,
        FamilyName::NearCritical,
        FamilyName::Periodic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Aklt => "aklt",
            FamilyName::Cluster => "cluster",
            FamilyName::RandomGapped => "random_gapped",
            FamilyName::NearCritical => "near_critical",
            FamilyName::Periodic => "periodic",
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        FamilyName::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == norm)
            .ok_or_else(|| BenchError::UnknownFamily(s.to_string()))
    }
}

/// Noise weights and angle of the synthetic families.
pub const EPS1: f64 = 0.01;
pub const EPS2: f64 = 0.02;
pub const EPS5: f64 = 0.05;
pub const THETA: f64 = 0.98 * core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: FamilyName,
    /// Number of tensor factors; the bond dimension is `2^t`.
    pub t: u32,
}

impl FamilySpec {
    pub fn new(family: FamilyName, t: u32) -> Self {
        FamilySpec { family, t }
    }

    /// Lift exponent giving bond dimension `d`, if `d` is a power of two.
    pub fn for_bond_dim(family: FamilyName, d: usize) -> Option<Self> {
        if d.is_power_of_two() && d >= 2 {
            Some(FamilySpec::new(family, d.trailing_zeros()))
        } else {
            None
        }
    }

    pub fn bond_dim(&self) -> usize {
        1 << self.t
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: C64, b: C64, cc: C64, d: C64) -> CMatrix {
    CMatrix::new(2, 2, vec![a, b, cc, d]).expect("finite entries")
}

fn scaled(m: CMatrix, s: f64) -> CMatrix {
    m.scale(c(s, 0.0))
}

pub fn pauli_x() -> CMatrix {
    m2(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> CMatrix {
    m2(ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO)
}

pub fn pauli_z() -> CMatrix {
    m2(ONE, ZERO, ZERO, c(-1.0, 0.0))
}

/// `|0⟩⟨1|`.
pub fn sigma_plus() -> CMatrix {
    m2(ZERO, ONE, ZERO, ZERO)
}

/// `|1⟩⟨0|`.
pub fn sigma_minus() -> CMatrix {
    m2(ZERO, ZERO, ONE, ZERO)
}

pub fn hadamard() -> CMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    m2(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0))
}

/// The 2×2 Kraus operators of a family before lifting.
pub fn base_kraus(family: FamilyName) -> KrausSet {
    let mats = match family {
        FamilyName::Aklt => {
            let w = (2.0f64 / 3.0).sqrt();
            vec![
                scaled(sigma_plus(), w),
                scaled(pauli_z(), -1.0 / 3.0f64.sqrt()),
                scaled(sigma_minus(), -w),
            ]
        }
        FamilyName::Cluster => {
            let h = hadamard();
            let hz = h.matmul(&pauli_z()).expect("2x2");
            let s = core::f64::consts::FRAC_1_SQRT_2;
            vec![scaled(h, s), scaled(hz, s)]
        }
        FamilyName::RandomGapped => vec![
            scaled(CMatrix::identity(2), (1.0 - 2.0 * EPS5).sqrt()),
            scaled(pauli_x(), EPS5.sqrt()),
            scaled(pauli_z(), EPS5.sqrt()),
        ],
        FamilyName::NearCritical => vec![
            scaled(
                m2(ONE, ZERO, ZERO, C64::from_polar(1.0, THETA)),
                (1.0 - EPS1).sqrt(),
            ),
            scaled(pauli_z(), EPS1.sqrt()),
        ],
        FamilyName::Periodic => {
            let w = (EPS2 / 2.0).sqrt();
            vec![
                scaled(m2(ONE, ZERO, ZERO, c(0.0, 1.0)), (1.0 - EPS2).sqrt()),
                scaled(pauli_x(), w),
                scaled(pauli_y(), w),
            ]
        }
    };
    KrausSet::new(mats).expect("uniform 2x2 shapes")
}

/// `t`-fold self tensor power: operators `K_{i_1} ⊗ ⋯ ⊗ K_{i_t}` over all
/// index tuples, in lexicographic order.
pub fn lift(base: &KrausSet, t: u32) -> Result<KrausSet, BenchError> {
    if t == 0 || t > MAX_LIFT {
        return Err(BenchError::BadLift(t));
    }
    let mut mats: Vec<CMatrix> = base.matrices().to_vec();
    for _ in 1..t {
        let mut next = Vec::with_capacity(mats.len() * base.phys_dim());
        for m in &mats {
            for k in base.matrices() {
                next.push(m.kron(k));
            }
        }
        mats = next;
    }
    Ok(KrausSet::new(mats)?)
}

pub fn build_family(spec: FamilySpec) -> Result<MpsFamily, BenchError> {
    let kraus = lift(&base_kraus(spec.family), spec.t)?;
    Ok(MpsFamily::new(
        format!("{}_D{}", spec.family, spec.bond_dim()),
        kraus,
    ))
}

/// Three 4×4 tensors whose odd-size norms vanish, with `ϖ` the
/// principal 8th root of unity.
pub fn dichotomy_tensors() -> MpsFamily {
    let s3 = 3.0f64.sqrt() / 6.0;
    let s2 = 2.0f64.sqrt() / 4.0;
    let w = C64::from_polar(1.0, core::f64::consts::FRAC_PI_4);
    let a1 = c(s3 + s2, 0.0);
    let a2 = c(-s3 + s2, 0.0);
    let a3 = w * s3 + s2;
    let a4 = -w * s3 + s2;
    let a5 = c(s3, 0.0);
    let a6 = c(-s3, 0.0);
    let off = |p: C64, q: C64| {
        CMatrix::new(
            4,
            4,
            vec![
                ZERO, ZERO, p, q, //
                ZERO, ZERO, q, p, //
                p, q, ZERO, ZERO, //
                q, p, ZERO, ZERO,
            ],
        )
        .expect("finite")
    };
    let diag = CMatrix::new(
        4,
        4,
        vec![
            a5, a6, ZERO, ZERO, //
            a6, a5, ZERO, ZERO, //
            ZERO, ZERO, a6, a5, //
            ZERO, ZERO, a5, a6,
        ],
    )
    .expect("finite");
    let kraus = KrausSet::new(vec![off(a1, a2), off(a3, a4), diag]).expect("4x4");
    MpsFamily::new("dichotomy", kraus)
}

/// The unitary whose columns are `(|1⟩−|2⟩)/√2, (|3⟩−|4⟩)/√2,
/// (|1⟩+|2⟩)/√2, (|3⟩+|4⟩)/√2`.
pub fn two_block_basis() -> CMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_real_rows(&[
        &[h, 0.0, h, 0.0],
        &[-h, 0.0, h, 0.0],
        &[0.0, h, 0.0, h],
        &[0.0, -h, 0.0, h],
    ])
}

/// A bond-dimension-4 family with two irreducible blocks on
/// `span{(|1⟩−|2⟩)/√2, (|3⟩−|4⟩)/√2}` and its complement: a depolarizing
/// block with spectrum `{1, −1/3, −1/3, −1/3}` and a flip block with
/// spectrum `{1, −1, 0, 0}`, acting through disjoint physical indices.
/// Its squared norms are `Γ(N) = 2 + (−1)^N + 3(−1/3)^N`.
pub fn two_block_family() -> MpsFamily {
    let u = two_block_basis();
    let s = 1.0 / 3.0f64.sqrt();
    let z2 = CMatrix::zeros(2, 2);
    let blocks = [
        (scaled(pauli_x(), s), z2.clone()),
        (scaled(pauli_y(), s), z2.clone()),
        (scaled(pauli_z(), s), z2.clone()),
        (z2.clone(), sigma_plus()),
        (z2.clone(), sigma_minus()),
    ];
    let mats = blocks
        .iter()
        .map(|(b1, b2)| {
            let d = direct_sum(b1, b2);
            u.matmul(&d)
                .and_then(|x| x.matmul(&u.adjoint()))
                .expect("4x4")
        })
        .collect();
    MpsFamily::new(
        "two_block",
        KrausSet::new(mats).expect("4x4"),
    )
}

/// Block-diagonal `a ⊕ b`.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMatrix::zeros(ra + rb, ca + cb);
    for i in 0..ra {
        for j in 0..ca {
            m[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..rb {
        for j in 0..cb {
            m[(ra + i, ca + j)] = b[(i, j)];
        }
    }
    m
}

/// Parameters of the formula suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteParams {
    /// Half-width of the boundedness band around 1.
    pub eps: f64,
    /// Ratio bound.
    pub gamma: f64,
    /// Clustering / long-range-order threshold.
    pub delta: f64,
    /// Period tested by the periodicity label.
    pub k: u32,
    /// Start size; formulas are prefixed with `X^{J−1}`.
    pub j: u32,
    /// Half-width of the equality band.
    pub eta_eq: f64,
}

/// Half-width of the equality band: `1e-9` relative to a value scale of 100.
pub const ETA_EQ: f64 = 1e-7;

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            eps: 0.01,
            gamma: 1.0,
            delta: 0.01,
            k: 2,
            j: 1,
            eta_eq: ETA_EQ,
        }
    }
}

/// One formula of the suite with the labels it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub labels: Vec<Label>,
    pub formula: Formula,
}

/// Names of the suite formulas, in table order.
pub const SUITE_NAMES: [&str; 7] = ["phi1", "phi2", "phi2p", "phi3", "phi4", "phi5", "phi6"];

/// The label table shared by the suite.
pub fn suite_labels(p: &SuiteParams) -> Vec<Label> {
    let val = Linear::val;
    let corr = val(0).sub(&Linear::fixed(1));
    let corr_next = val(1).sub(&Linear::fixed(1));
    vec![
        Label::new("nz", val(0), IntervalPredicate::open(0.0, f64::INFINITY)),
        Label::new("bd", val(0), IntervalPredicate::open(1.0 - p.eps, 1.0 + p.eps)),
        Label::new("clust", corr.clone(), IntervalPredicate::open(-p.delta, p.delta)),
        Label::new(
            "rat",
            ValueExpr::Ratio(val(1), val(0)),
            IntervalPredicate::open(-p.gamma, p.gamma),
        ),
        Label::new(
            "osc",
            ValueExpr::product(corr.clone(), corr_next),
            IntervalPredicate::open(f64::NEG_INFINITY, 0.0),
        ),
        Label::new(
            "per",
            val(0).sub(&val(p.k)),
            IntervalPredicate::closed(-p.eta_eq, p.eta_eq),
        ),
        Label::outside("lro", corr, IntervalPredicate::closed(-p.delta, p.delta)),
    ]
}

fn suite_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "phi1" => "G nz",
        "phi2" => "G bd",
        "phi2p" => "G (bd & clust)",
        "phi3" => "E G (rat & X rat)",
        "phi4" => "G (clust & !osc)",
        "phi5" => "G !per",
        "phi6" => "E G (lro & !clust)",
        _ => return None,
    })
}

/// Builds one suite formula by name (`phi1` … `phi6`, `phi2p`).
pub fn suite_entry(name: &str, p: &SuiteParams) -> Result<SuiteEntry, BenchError> {
    let idx = SUITE_NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| BenchError::UnknownFormula(name.to_string()))?;
    let text = suite_text(name).expect("listed");
    let labels = suite_labels(p);
    let prefix = if p.j > 1 {
        format!("X^{} ", p.j - 1)
    } else {
        String::new()
    };
    let body = format!("{prefix}{text}");
    let formula = crate::logic::parse_formula(&body, &labels)?;
    let used = formula.label_names();
    Ok(SuiteEntry {
        name: SUITE_NAMES[idx],
        labels: labels
            .into_iter()
            .filter(|l| used.iter().any(|u| u == l.name()))
            .collect(),
        formula,
    })
}

/// All seven suite formulas in table order.
pub fn formula_suite(p: &SuiteParams) -> Vec<SuiteEntry> {
    SUITE_NAMES
        .iter()
        .map(|n| suite_entry(n, p).expect("suite formulas parse"))
        .collect()
}
