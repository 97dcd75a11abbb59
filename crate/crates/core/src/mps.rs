//! Kraus data of a periodic MPS family, the transfer (Liouville) operator,
//! and squared norms `Γ(N) = ⟨ψ_N|ψ_N⟩ = tr(M_E^N)`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg_attr(test, allow(unused_imports))]
use once_cell::race::OnceBox;
use thiserror::Error;

use crate::matcore::{self, CMatrix, LinalgError, C64, ZERO};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest `d^n` the brute-force expansion accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Tolerance on `‖Σ A†A − I‖_F` for the trace-preserving flag.
pub const TP_TOL: f64 = 1e-9;

/// Relative size of the imaginary part of `tr(M^n)` that is still accepted.
pub const IMAG_TOL: f64 = 1e-8;

/// Negative norms of at most this size are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpsError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("a Kraus set needs at least one matrix")]
    Empty,
    #[error("Kraus matrix {index} is {rows}x{cols}, expected {expected}x{expected}")]
    Shape {
        index: usize,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("tr(M^{n}) has imaginary part {im:e} against real part {re:e}")]
    Imaginary { n: u64, re: f64, im: f64 },
    #[error("brute force over {words} words exceeds the limit of {BRUTE_FORCE_LIMIT}")]
    TooLarge { words: u64 },
    #[error("system size must be at least 1")]
    ZeroSize,
}

pub type Result<T> = core::result::Result<T, MpsError>;

/// The matrices `{A_k}`, each `D × D`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    mats: Vec<CMatrix>,
    bond: usize,
    trace_preserving: bool,
}

impl KrausSet {
    pub fn new(mats: Vec<CMatrix>) -> Result<Self> {
        let first = mats.first().ok_or(MpsError::Empty)?;
        let bond = first.rows();
        for (index, m) in mats.iter().enumerate() {
            if m.rows() != bond || m.cols() != bond {
                return Err(MpsError::Shape {
                    index,
                    rows: m.rows(),
                    cols: m.cols(),
                    expected: bond,
                });
            }
        }
        let mut set = KrausSet {
            mats,
            bond,
            trace_preserving: false,
        };
        set.trace_preserving = set.tp_defect() <= TP_TOL;
        Ok(set)
    }

    /// Physical dimension `d`.
    pub fn phys_dim(&self) -> usize {
        self.mats.len()
    }

    /// Bond dimension `D`.
    pub fn bond_dim(&self) -> usize {
        self.bond
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// `‖Σ A_k†A_k − I‖_F`.
    pub fn tp_defect(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.bond, self.bond);
        for a in &self.mats {
            let p = a.adjoint().matmul(a).expect("square Kraus matrices");
            acc = acc.add(&p).expect("same shape");
        }
        acc.sub(&CMatrix::identity(self.bond))
            .expect("same shape")
            .frobenius_norm()
    }

    /// `‖Σ A_k†A_k‖_2^{1/2}`, the largest singular value of the stacked
    /// operator `[A_1; …; A_d]`.
    pub fn stacked_norm(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.bond, self.bond);
        for a in &self.mats {
            acc = acc
                .add(&a.adjoint().matmul(a).expect("square"))
                .expect("same shape");
        }
        // Hermitian PSD: the largest eigenvalue is the 2-norm
        let vals = matcore::eigenvalues(&acc).unwrap_or_default();
        vals.iter().map(|z| z.re).fold(0.0, f64::max).max(0.0).sqrt()
    }

    /// `{V† A_k V}` for a `D × D'` matrix `V` with orthonormal columns.
    pub fn compress(&self, basis: &CMatrix) -> Result<KrausSet> {
        let vh = basis.adjoint();
        let mats = self
            .mats
            .iter()
            .map(|a| vh.matmul(&a.matmul(basis)?))
            .collect::<core::result::Result<Vec<_>, _>>()?;
        KrausSet::new(mats)
    }

    /// `{U† A_k U}`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<KrausSet> {
        self.compress(u)
    }

    /// Matrix-free Liouville action `vec(X) ↦ vec(Σ A X A†)`.
    pub fn apply_liouville(&self, v: &[C64], out: &mut [C64]) {
        liouville_action(&self.mats, &self.mats, v, out);
    }
}

/// `vec(X) ↦ vec(Σ_k A_k X B_k†)`, the action of `Σ conj(B_k) ⊗ A_k`.
pub fn liouville_action(a: &[CMatrix], b: &[CMatrix], v: &[C64], out: &mut [C64]) {
    let ra = a[0].rows();
    let rb = b[0].rows();
    let ca = a[0].cols();
    let cb = b[0].cols();
    debug_assert_eq!(v.len(), ca * cb);
    debug_assert_eq!(out.len(), ra * rb);
    out.iter_mut().for_each(|z| *z = ZERO);
    // X is ca × cb, column-stacked
    let mut ax = vec![ZERO; ra * cb];
    for (ak, bk) in a.iter().zip(b) {
        ax.iter_mut().for_each(|z| *z = ZERO);
        for j in 0..cb {
            let xcol = &v[j * ca..(j + 1) * ca];
            for i in 0..ra {
                let arow = ak.row(i);
                let mut s = ZERO;
                for (p, q) in arow.iter().zip(xcol) {
                    s += p * q;
                }
                ax[i * cb + j] = s;
            }
        }
        // out[i + j*ra] += Σ_l ax[i,l] conj(b[j,l])
        for j in 0..rb {
            let brow = bk.row(j);
            for i in 0..ra {
                let axrow = &ax[i * cb..(i + 1) * cb];
                let mut s = ZERO;
                for (p, q) in axrow.iter().zip(brow) {
                    s += p * q.conj();
                }
                out[i + j * ra] += s;
            }
        }
    }
}

/// `M_E = Σ_k conj(A_k) ⊗ A_k`.
pub fn liouville_matrix(k: &KrausSet) -> CMatrix {
    cross_liouville(k.matrices(), k.matrices())
}

/// `Σ_k conj(B_k) ⊗ A_k`.
pub fn cross_liouville(a: &[CMatrix], b: &[CMatrix]) -> CMatrix {
    let mut acc = CMatrix::zeros(a[0].rows() * b[0].rows(), a[0].cols() * b[0].cols());
    for (ak, bk) in a.iter().zip(b) {
        acc = acc.add(&bk.conj().kron(ak)).expect("uniform shapes");
    }
    acc
}

/// A named family `{|ψ_N⟩}` with a lazily built Liouville matrix.
pub struct MpsFamily {
    name: String,
    kraus: KrausSet,
    liouville: OnceBox<CMatrix>,
}

impl Clone for MpsFamily {
    fn clone(&self) -> Self {
        MpsFamily::new(self.name.clone(), self.kraus.clone())
    }
}

impl core::fmt::Debug for MpsFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MpsFamily")
            .field("name", &self.name)
            .field("d", &self.kraus.phys_dim())
            .field("D", &self.kraus.bond_dim())
            .finish()
    }
}

impl MpsFamily {
    pub fn new(name: impl Into<String>, kraus: KrausSet) -> Self {
        MpsFamily {
            name: name.into(),
            kraus,
            liouville: OnceBox::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn phys_dim(&self) -> usize {
        self.kraus.phys_dim()
    }

    pub fn bond_dim(&self) -> usize {
        self.kraus.bond_dim()
    }

    /// Dimension of the transfer operator, `D²`.
    pub fn transfer_dim(&self) -> usize {
        self.bond_dim() * self.bond_dim()
    }

    /// Whether the transfer operator is small enough to hold densely.
    pub fn is_dense(&self) -> bool {
        self.transfer_dim() <= matcore::DENSE_LIMIT
    }

    /// The cached `M_E`; built on first use.
    pub fn liouville(&self) -> &CMatrix {
        self.liouville
            .get_or_init(|| Box::new(liouville_matrix(&self.kraus)))
    }

    /// `Γ(n) = Re tr(M_E^n)`.
    pub fn norm_sq(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(MpsError::ZeroSize);
        }
        let t = if self.is_dense() {
            self.liouville().pow(n)?.trace()?
        } else {
            self.trace_power_matrix_free(n)
        };
        accept_trace(n, t)
    }

    /// Propagates every basis vector `e_j` through `n` applications and
    /// accumulates the diagonal.
    fn trace_power_matrix_free(&self, n: u64) -> C64 {
        let dim = self.transfer_dim();
        let mut cur = vec![ZERO; dim];
        let mut next = vec![ZERO; dim];
        let mut total = ZERO;
        for j in 0..dim {
            cur.iter_mut().for_each(|z| *z = ZERO);
            cur[j] = C64::new(1.0, 0.0);
            for _ in 0..n {
                self.kraus.apply_liouville(&cur, &mut next);
                core::mem::swap(&mut cur, &mut next);
            }
            total += cur[j];
        }
        total
    }

    /// `Γ(n)` for every `n` in `1..=len`.
    pub fn norm_sq_range(&self, len: u64) -> Result<Vec<f64>> {
        let ts = if self.is_dense() {
            trace_sequence(self.liouville(), len)?
        } else {
            (1..=len)
                .map(|n| self.trace_power_matrix_free(n))
                .collect()
        };
        ts.into_iter()
            .enumerate()
            .map(|(i, t)| accept_trace(i as u64 + 1, t))
            .collect()
    }

    /// Amplitudes `tr(A_{k_1} ⋯ A_{k_n})` of every word, keyed by the
    /// zero-based index word.
    pub fn brute_force_amplitudes(&self, n: usize) -> Result<BTreeMap<Vec<usize>, C64>> {
        let mut out = BTreeMap::new();
        self.for_each_amplitude(n, |w, a| {
            out.insert(w.to_vec(), a);
        })?;
        Ok(out)
    }

    /// `Σ_w |tr(A_w)|²` by explicit expansion.
    pub fn brute_force_norm_sq(&self, n: usize) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_amplitude(n, |_, a| total += a.norm_sqr())?;
        Ok(total)
    }

    fn for_each_amplitude(&self, n: usize, mut f: impl FnMut(&[usize], C64)) -> Result<()> {
        if n == 0 {
            return Err(MpsError::ZeroSize);
        }
        let d = self.phys_dim() as u64;
        let words = d.checked_pow(n as u32).unwrap_or(u64::MAX);
        if words > BRUTE_FORCE_LIMIT {
            return Err(MpsError::TooLarge { words });
        }
        let mats = self.kraus.matrices();
        let bond = self.bond_dim();
        // prefix products along a depth-first walk over words
        let mut stack: Vec<CMatrix> = Vec::with_capacity(n + 1);
        stack.push(CMatrix::identity(bond));
        let mut word = vec![0usize; n];
        let mut depth = 0usize;
        loop {
            if depth == n {
                f(&word, stack[n].trace()?);
                // advance to the next word
                loop {
                    if depth == 0 {
                        return Ok(());
                    }
                    depth -= 1;
                    stack.pop();
                    word[depth] += 1;
                    if word[depth] < mats.len() {
                        break;
                    }
                    word[depth] = 0;
                }
            }
            let next = stack[depth].matmul(&mats[word[depth]])?;
            stack.push(next);
            depth += 1;
        }
    }
}

fn accept_trace(n: u64, t: C64) -> Result<f64> {
    if t.im.abs() > IMAG_TOL * t.re.abs().max(1.0) {
        return Err(MpsError::Imaginary {
            n,
            re: t.re,
            im: t.im,
        });
    }
    Ok(clamp_norm(t.re))
}

/// Clamps tiny negative squared norms to zero.
pub fn clamp_norm(v: f64) -> f64 {
    if v < 0.0 && v >= -CLAMP_TOL {
        0.0
    } else {
        v
    }
}

/// `tr(M^n)` for `n = 1..=len` with baby-step giant-step products:
/// `tr(M^{a·s+b}) = Σ_ij (M^b)_ij (M^{a·s})_ji`.
pub fn trace_sequence(m: &CMatrix, len: u64) -> Result<Vec<C64>> {
    let dim = m.rows();
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            op: "trace_sequence",
            rows: m.rows(),
            cols: m.cols(),
        }
        .into());
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    // baby-step count, bounded so the stored powers stay near 256 MiB
    let budget = (256usize << 20) / (16 * dim * dim).max(1);
    let s = (((len as f64).sqrt().ceil()) as usize).clamp(1, budget.max(1));
    let mut baby: Vec<CMatrix> = Vec::with_capacity(s);
    baby.push(CMatrix::identity(dim));
    for b in 1..s {
        let next = baby[b - 1].matmul(m)?;
        baby.push(next);
    }
    let step = baby[s - 1].matmul(m)?;
    let mut giant = CMatrix::identity(dim);
    let mut out = Vec::with_capacity(len as usize);
    let mut base = 0u64;
    while (out.len() as u64) < len {
        for (b, pb) in baby.iter().enumerate() {
            let n = base + b as u64;
            if n == 0 {
                continue;
            }
            if n > len {
                break;
            }
            out.push(pair_trace(pb, &giant));
        }
        base += s as u64;
        if (out.len() as u64) < len {
            giant = giant.matmul(&step)?;
        }
    }
    Ok(out)
}

/// `tr(A B)` without forming the product.
fn pair_trace(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.rows();
    let mut s = ZERO;
    for i in 0..n {
        let arow = a.row(i);
        for j in 0..n {
            s += arow[j] * b[(j, i)];
        }
    }
    s
}
