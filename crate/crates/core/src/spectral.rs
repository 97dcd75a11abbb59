//! Irreducible decomposition of the CP map `E(X) = Σ A_k X A_k†` and the
//! spectral data the checker consumes.
//!
//! After splitting `C^D = ⊕_m H_m` into irreducible blocks with Kraus
//! restrictions `B_{m,k}`, the transfer matrix is block triangular over the
//! sectors `H_m ⊗ H_{m'}`, so
//! `tr(M_E^N) = Σ_{m,m'} tr(M_{mm'}^N)` with `M_{mm'} = Σ_k conj(B_{m,k}) ⊗ B_{m',k}`.
//! Only the diagonal sectors `m = m'` are the components' own transfer
//! matrices; the off-diagonal ones vanish when the blocks use disjoint
//! physical indices but not in general.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

#[cfg_attr(test, allow(unused_imports))]
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matcore::{
    self, dominant_eigs, eigen_decomposition, eigenvalues, gaussian_c64, normalize,
    orthogonalize, CMatrix, EigenPair, LinalgError, C64, ZERO,
};
use crate::mps::{cross_liouville, liouville_action, liouville_matrix, KrausSet, MpsError};
#[allow(unused_imports)]
use num_traits::Float;

/// Relative rank tolerance of the closure search.
pub const TAU_RANK: f64 = 1e-9;
/// Relative invariance defect below which a subspace is accepted.
pub const TAU_INVARIANT: f64 = 1e-8;
/// Relative defect above which a subspace is clearly not invariant.
pub const TAU_NOT_INVARIANT: f64 = 1e-4;
/// Tolerance of the period fit on the normalized trace sequence.
pub const TAU_PERIOD: f64 = 1e-6;
/// Eigenvalues at most this fraction of the spectral radius count as zero.
pub const TAU_NIL: f64 = 1e-6;
/// Relative width of a modulus shell.
pub const SHELL_TOL: f64 = 1e-8;
/// Random Kraus combinations tried per level of the subspace search.
pub const SEEDS_PER_LEVEL: usize = 8;
/// Default seed of the subspace search.
pub const DEFAULT_SEED: u64 = 0x1c1_5eed;
/// Largest sector dimension handled densely.
pub const DENSE_SECTOR: usize = matcore::DENSE_LIMIT;
/// Relative inflation of computed moduli in tail bounds, covering the
/// spread of clustered or defective eigenvalues.
pub const RADIUS_SLACK: f64 = 1e-6;
/// Eigenvalues extracted per sector in matrix-free mode.
pub const MATRIX_FREE_COUNT: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error("subspace of dimension {dim} is neither clearly invariant nor clearly not (defect {defect:e}, scale {scale:e})")]
    Ambiguous { dim: usize, defect: f64, scale: f64 },
    #[error("no period p <= {max_p} fits the normalized trace sequence (best deviation {deviation:e})")]
    Period { max_p: u32, deviation: f64 },
    #[error("seed vector is zero")]
    ZeroSeed,
    #[error("operation needs a positive radius")]
    ZeroRadius,
}

pub type Result<T> = core::result::Result<T, SpectralError>;

/// One irreducible block `(H_m, E_m)`.
#[derive(Debug, Clone)]
pub struct IrreducibleComponent {
    /// `D × D_m`, orthonormal columns spanning `H_m`.
    pub basis: CMatrix,
    /// `B_{m,k} = V† A_k V`.
    pub kraus_restricted: KrausSet,
    pub radius: f64,
    pub period: u32,
    pub peripheral_pairs: Vec<EigenPair>,
    pub second_radius: f64,
    /// Zero radius, failed period fit, or no gap below the peripheral shell.
    pub degenerate: bool,
    pub note: Option<String>,
}

impl IrreducibleComponent {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// Peripheral eigenvalues `r·e^{2πil/p}` in the order of the pairs.
    pub fn peripheral_values(&self) -> Vec<C64> {
        self.peripheral_pairs.iter().map(|p| p.value).collect()
    }
}

/// `|remainder(N)| ≤ count · radius^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Remainder {
    pub count: usize,
    pub radius: f64,
}

/// Spectrum of one sector transfer matrix `M_{mm'}`.
#[derive(Debug, Clone)]
pub struct Sector {
    pub row: usize,
    pub col: usize,
    pub dim: usize,
    /// All eigenvalues (dense) or the dominant ones (matrix-free).
    pub eigenvalues: Vec<C64>,
    /// Bound on the eigenvalues not listed, in matrix-free mode.
    pub remainder: Option<Remainder>,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub components: Vec<IrreducibleComponent>,
    /// `lcm` of the component periods.
    pub kappa: u64,
    pub sectors: Vec<Sector>,
    pub notes: Vec<String>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// `‖(I − P) A_k P‖_F` maximized over `k`, for `P` the projector onto the
/// columns of `v`.
pub fn invariance_defect(k: &KrausSet, v: &CMatrix) -> f64 {
    let vh = v.adjoint();
    let mut worst: f64 = 0.0;
    for a in k.matrices() {
        let av = a.matmul(v).expect("conformable");
        let proj = v.matmul(&vh.matmul(&av).expect("conformable")).expect("conformable");
        worst = worst.max(av.sub(&proj).expect("same shape").frobenius_norm());
    }
    worst
}

fn columns_to_matrix(rows: usize, cols: &[Vec<C64>]) -> CMatrix {
    CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Smallest subspace containing `seed` and closed under every `A_k`, by
/// breadth-first closure.
pub fn minimal_invariant_subspace(k: &KrausSet, seed: &[C64]) -> Result<CMatrix> {
    let tau = TAU_RANK * k.stacked_norm().max(f64::MIN_POSITIVE);
    closure(k, seed, tau)
}

fn closure(k: &KrausSet, seed: &[C64], tau: f64) -> Result<CMatrix> {
    let d = k.bond_dim();
    let mut first = seed.to_vec();
    if normalize(&mut first) == 0.0 {
        return Err(SpectralError::ZeroSeed);
    }
    let mut basis: Vec<Vec<C64>> = vec![first];
    let mut next = 0;
    while next < basis.len() && basis.len() < d {
        let v = basis[next].clone();
        next += 1;
        for a in k.matrices() {
            let mut w = a.matvec(&v)?;
            if orthogonalize(&mut w, &basis) > tau {
                normalize(&mut w);
                basis.push(w);
                if basis.len() == d {
                    break;
                }
            }
        }
    }
    Ok(columns_to_matrix(d, &basis))
}

/// Orthonormal basis of the orthogonal complement of the columns of `v`.
fn complement(v: &CMatrix) -> CMatrix {
    let d = v.rows();
    let mut basis: Vec<Vec<C64>> = (0..v.cols()).map(|j| v.column(j)).collect();
    let start = basis.len();
    for i in 0..d {
        let mut e = vec![ZERO; d];
        e[i] = C64::new(1.0, 0.0);
        if orthogonalize(&mut e, &basis) > 1e-6 {
            normalize(&mut e);
            basis.push(e);
        }
        if basis.len() == d {
            break;
        }
    }
    columns_to_matrix(d, &basis[start..])
}

/// Finds a proper invariant subspace, if any, using eigenvectors of random
/// combinations `Σ c_k A_k` as closure seeds.
fn find_invariant(k: &KrausSet, rng: &mut ChaCha8Rng, scale: f64) -> Result<Option<CMatrix>> {
    let d = k.bond_dim();
    if d <= 1 {
        return Ok(None);
    }
    let tau = TAU_RANK * scale;
    let mut best: Option<CMatrix> = None;
    for _ in 0..SEEDS_PER_LEVEL {
        let mut r = CMatrix::zeros(d, d);
        for a in k.matrices() {
            r = r.add(&a.scale(gaussian_c64(rng)))?;
        }
        let (_, vecs) = eigen_decomposition(&r)?;
        for j in 0..d {
            let sub = closure(k, &vecs.column(j), tau)?;
            if sub.cols() >= d || best.as_ref().is_some_and(|b| b.cols() <= sub.cols()) {
                continue;
            }
            let defect = invariance_defect(k, &sub);
            if defect <= TAU_INVARIANT * scale {
                best = Some(sub);
            } else if defect <= TAU_NOT_INVARIANT * scale {
                return Err(SpectralError::Ambiguous {
                    dim: sub.cols(),
                    defect,
                    scale,
                });
            }
        }
        if best.as_ref().is_some_and(|b| b.cols() == 1) {
            break;
        }
    }
    Ok(best)
}

/// Recursively splits into irreducible blocks; returns global bases.
fn split(k: &KrausSet, basis: CMatrix, rng: &mut ChaCha8Rng, scale: f64, out: &mut Vec<CMatrix>) -> Result<()> {
    match find_invariant(k, rng, scale)? {
        None => out.push(basis),
        Some(h1) => {
            let h2 = complement(&h1);
            let b1 = basis.matmul(&h1)?;
            let b2 = basis.matmul(&h2)?;
            split(&k.compress(&h1)?, b1, rng, scale, out)?;
            split(&k.compress(&h2)?, b2, rng, scale, out)?;
        }
    }
    Ok(())
}

/// `ρ(M_E)` via the dominant eigenpair of the matrix-free Liouville action.
pub fn spectral_radius(k: &KrausSet) -> Result<f64> {
    let dim = k.bond_dim() * k.bond_dim();
    let top = dominant_eigs(&|v, out| k.apply_liouville(v, out), dim, 1, 1e-10)?;
    Ok(top.first().map_or(0.0, |p| p.value.norm()))
}

/// Smallest `p` with `|t_N − p·[p | N]| ≤ τ_period` for the normalized
/// trace sequence `t_N = tr(M^N)/r^N` sampled on `N₀ … N₀ + 2·max_p`, where
/// the burn-in `N₀` makes `(s/r)^{N₀} ≤ 1e-10`.
pub fn detect_period(
    trace: &dyn Fn(u64) -> Result<C64>,
    r: f64,
    s: f64,
    max_p: u32,
) -> Result<u32> {
    if r <= 0.0 {
        return Err(SpectralError::ZeroRadius);
    }
    let ratio = (s / r).clamp(0.0, 1.0);
    let n0 = if ratio <= 0.0 {
        1
    } else if ratio >= 1.0 {
        10_000
    } else {
        ((1e-10f64).ln() / ratio.ln()).ceil().clamp(1.0, 10_000.0) as u64
    };
    let samples: Vec<C64> = (n0..=n0 + 2 * max_p as u64)
        .map(|n| trace(n).map(|t| t / r.powf(n as f64)))
        .collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    for p in 1..=max_p {
        let dev = samples
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let n = n0 + i as u64;
                let want = if n % p as u64 == 0 { p as f64 } else { 0.0 };
                (t - C64::new(want, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        if dev <= TAU_PERIOD {
            return Ok(p);
        }
        best = best.min(dev);
    }
    Err(SpectralError::Period {
        max_p,
        deviation: best,
    })
}

/// Eigenpairs for `r·e^{2πil/p}`, `l = 0 … p−1`, of the component's
/// Liouville action.
pub fn peripheral_pairs(k: &KrausSet, r: f64, p: u32) -> Result<Vec<EigenPair>> {
    if r <= 0.0 {
        return Err(SpectralError::ZeroRadius);
    }
    let dim = k.bond_dim() * k.bond_dim();
    let apply = |v: &[C64], out: &mut [C64]| k.apply_liouville(v, out);
    let found = dominant_eigs(&apply, dim, (p as usize).min(dim), 1e-10)?;
    let mut out = Vec::with_capacity(p as usize);
    for l in 0..p {
        let target = C64::from_polar(r, TAU * l as f64 / p as f64);
        let pair = found
            .iter()
            .min_by(|a, b| {
                (a.value - target)
                    .norm()
                    .partial_cmp(&(b.value - target).norm())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .cloned()
            .ok_or(LinalgError::Convergence {
                iterations: 0,
                residual: f64::INFINITY,
            })?;
        let mut w = vec![ZERO; dim];
        apply(&pair.vector, &mut w);
        let res: f64 = w
            .iter()
            .zip(&pair.vector)
            .map(|(a, b)| (a - pair.value * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > 1e-8 * r {
            return Err(LinalgError::Convergence {
                iterations: 0,
                residual: res,
            }
            .into());
        }
        out.push(pair);
    }
    Ok(out)
}

/// Spectral radius of `M − V Λ (V†V)^{-1} V†`, which removes the given
/// eigenpairs and keeps the rest of the spectrum. For orthonormal
/// eigenvectors this is `M − Σ λ_l |v_l⟩⟨v_l|`.
pub fn second_radius(k: &KrausSet, pairs: &[EigenPair]) -> Result<f64> {
    let dim = k.bond_dim() * k.bond_dim();
    if pairs.len() >= dim {
        return Ok(0.0);
    }
    let p = pairs.len();
    // W = V (V†V)^{-1}, so that W†V = I
    let v = CMatrix::from_fn(dim, p, |i, j| pairs[j].vector[i]);
    let gram = v.adjoint().matmul(&v)?;
    let w = v.matmul(&invert(&gram)?)?;
    let wh = w.adjoint();
    let apply = |x: &[C64], out: &mut [C64]| {
        k.apply_liouville(x, out);
        if p == 0 {
            return;
        }
        let c = wh.matvec(x).expect("conformable");
        for (l, pair) in pairs.iter().enumerate() {
            let coef = pair.value * c[l];
            for (o, vi) in out.iter_mut().zip(&pair.vector) {
                *o -= coef * vi;
            }
        }
    };
    let top = dominant_eigs(&apply, dim, 1, 1e-9)?;
    Ok(top.first().map_or(0.0, |q| q.value.norm()))
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
fn invert(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    let mut m = a.clone();
    let mut inv = CMatrix::identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().partial_cmp(&m[(j, col)].norm()).unwrap())
            .unwrap_or(col);
        if m[(piv, col)].norm() < 1e-300 {
            return Err(LinalgError::Convergence {
                iterations: 0,
                residual: 0.0,
            }
            .into());
        }
        for j in 0..n {
            let (x, y) = (m[(col, j)], m[(piv, j)]);
            m[(col, j)] = y;
            m[(piv, j)] = x;
            let (x, y) = (inv[(col, j)], inv[(piv, j)]);
            inv[(col, j)] = y;
            inv[(piv, j)] = x;
        }
        let d = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[(i, col)];
            if f == ZERO {
                continue;
            }
            for j in 0..n {
                let mv = m[(col, j)];
                let iv = inv[(col, j)];
                m[(i, j)] -= f * mv;
                inv[(i, j)] -= f * iv;
            }
        }
    }
    Ok(inv)
}

/// Options of [`decompose_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    pub seed: u64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { seed: DEFAULT_SEED }
    }
}

pub fn decompose(k: &KrausSet) -> Result<Decomposition> {
    decompose_with(k, DecomposeOptions::default())
}

/// Splits into irreducible blocks and computes per-component radius,
/// period, peripheral pairs and second radius, plus every sector spectrum.
pub fn decompose_with(k: &KrausSet, opts: DecomposeOptions) -> Result<Decomposition> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = k.stacked_norm().max(f64::MIN_POSITIVE);
    let mut bases = Vec::new();
    split(k, CMatrix::identity(k.bond_dim()), &mut rng, scale, &mut bases)?;
    let restricted: Vec<KrausSet> = bases
        .iter()
        .map(|b| k.compress(b))
        .collect::<core::result::Result<_, _>>()?;

    let mut sectors = Vec::with_capacity(bases.len() * bases.len());
    for (i, bi) in restricted.iter().enumerate() {
        for (j, bj) in restricted.iter().enumerate() {
            sectors.push(sector_spectrum(i, j, bi, bj)?);
        }
    }
    let global_radius = sectors
        .iter()
        .flat_map(|s| s.eigenvalues.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let mut notes = Vec::new();
    let mut components = Vec::with_capacity(bases.len());
    let mut kappa = 1u64;
    let count = bases.len();
    for (m, (basis, kr)) in bases.into_iter().zip(restricted).enumerate() {
        let own = &sectors[m * count + m];
        let comp = analyze_component(basis, kr, own, global_radius)?;
        if let Some(n) = &comp.note {
            notes.push(format!("component {m}: {n}"));
        }
        kappa = lcm(kappa, comp.period as u64);
        components.push(comp);
    }
    Ok(Decomposition {
        components,
        kappa,
        sectors,
        notes,
    })
}

fn sector_spectrum(row: usize, col: usize, bi: &KrausSet, bj: &KrausSet) -> Result<Sector> {
    let dim = bi.bond_dim() * bj.bond_dim();
    if dim <= DENSE_SECTOR {
        let m = if row == col {
            liouville_matrix(bi)
        } else {
            cross_liouville(bj.matrices(), bi.matrices())
        };
        Ok(Sector {
            row,
            col,
            dim,
            eigenvalues: eigenvalues(&m)?,
            remainder: None,
        })
    } else {
        let apply = |v: &[C64], out: &mut [C64]| {
            liouville_action(bj.matrices(), bi.matrices(), v, out)
        };
        let count = MATRIX_FREE_COUNT.min(dim);
        let top = dominant_eigs(&apply, dim, count, 1e-9)?;
        let eigenvalues: Vec<C64> = top.iter().map(|p| p.value).collect();
        let radius = eigenvalues.last().map_or(0.0, |z| z.norm());
        Ok(Sector {
            row,
            col,
            dim,
            remainder: Some(Remainder {
                count: dim - eigenvalues.len(),
                radius,
            }),
            eigenvalues,
        })
    }
}

/// Peripheral shell of a spectrum: values within `SHELL_TOL·r` of `r`.
fn peripheral_of(vals: &[C64], r: f64) -> Vec<C64> {
    vals.iter()
        .copied()
        .filter(|z| z.norm() >= r * (1.0 - SHELL_TOL))
        .collect()
}

fn analyze_component(
    basis: CMatrix,
    kraus: KrausSet,
    own: &Sector,
    global_radius: f64,
) -> Result<IrreducibleComponent> {
    let vals = &own.eigenvalues;
    let r = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dm = basis.cols();
    let mut comp = IrreducibleComponent {
        basis,
        kraus_restricted: kraus,
        radius: r,
        period: 1,
        peripheral_pairs: Vec::new(),
        second_radius: 0.0,
        degenerate: false,
        note: None,
    };
    if r <= TAU_NIL * global_radius || r == 0.0 {
        comp.radius = 0.0;
        comp.degenerate = true;
        comp.note = Some("nilpotent; contributes nothing for N >= D_m".into());
        return Ok(comp);
    }
    let peri = peripheral_of(vals, r);
    let s = vals
        .iter()
        .map(|z| z.norm())
        .filter(|&m| m < r * (1.0 - SHELL_TOL))
        .fold(0.0, f64::max);
    let max_p = (dm * dm) as u32;
    let sums = |n: u64| -> Result<C64> {
        Ok(vals.iter().map(|z| z.powf(n as f64)).sum())
    };
    match detect_period(&sums, r, s, max_p) {
        Ok(p) if p as usize == peri.len() => comp.period = p,
        Ok(p) => {
            comp.period = p;
            comp.degenerate = true;
            comp.note = Some(format!(
                "period {p} disagrees with {} peripheral eigenvalues",
                peri.len()
            ));
        }
        Err(e) => {
            comp.period = peri.len().max(1) as u32;
            comp.degenerate = true;
            comp.note = Some(format!("{e}"));
        }
    }
    match peripheral_pairs(&comp.kraus_restricted, r, comp.period) {
        Ok(pairs) => {
            comp.second_radius = match second_radius(&comp.kraus_restricted, &pairs) {
                Ok(sr) => sr,
                Err(_) => s,
            };
            comp.peripheral_pairs = pairs;
        }
        Err(e) => {
            comp.second_radius = s;
            comp.degenerate = true;
            comp.note = Some(format!("peripheral pairs: {e}"));
        }
    }
    if comp.second_radius >= r - 1e-12 {
        comp.degenerate = true;
        comp.note.get_or_insert_with(|| "no gap below the peripheral shell".into());
    }
    Ok(comp)
}

impl Decomposition {
    pub fn spectral_radius(&self) -> f64 {
        self.sectors
            .iter()
            .flat_map(|s| s.eigenvalues.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Whether every sector spectrum is complete.
    pub fn is_complete(&self) -> bool {
        self.sectors.iter().all(|s| s.remainder.is_none())
    }

    /// Σ over all sectors of `Σ λ^n` (the trace identity).
    pub fn trace_power(&self, n: u64) -> C64 {
        self.sectors
            .iter()
            .flat_map(|s| s.eigenvalues.iter())
            .map(|z| z.powf(n as f64))
            .sum()
    }

    /// Σ over diagonal sectors only, i.e. the components' own traces.
    pub fn diagonal_trace_power(&self, n: u64) -> C64 {
        self.sectors
            .iter()
            .filter(|s| s.row == s.col)
            .flat_map(|s| s.eigenvalues.iter())
            .map(|z| z.powf(n as f64))
            .sum()
    }

    /// The sector transfer matrix `M_{ij}`.
    pub fn sector_matrix(&self, i: usize, j: usize) -> CMatrix {
        let bi = &self.components[i].kraus_restricted;
        let bj = &self.components[j].kraus_restricted;
        cross_liouville(bj.matrices(), bi.matrices())
    }

    /// Upper bound on `|Σ λ^n|` over every eigenvalue of modulus below
    /// `r·(1 − SHELL_TOL)`: per sector, the count of such eigenvalues times
    /// the largest of their (slightly inflated) moduli to the power `n`.
    pub fn tail_bound(&self, r: f64, n: u64) -> f64 {
        let cut = r * (1.0 - SHELL_TOL);
        let mut total = 0.0;
        for s in &self.sectors {
            let below: Vec<f64> = s
                .eigenvalues
                .iter()
                .map(|z| z.norm())
                .filter(|&m| m < cut)
                .collect();
            let mut count = below.len();
            let mut rad = below.iter().copied().fold(0.0, f64::max);
            if let Some(rem) = s.remainder {
                count += rem.count;
                rad = rad.max(rem.radius);
            }
            if count > 0 && rad > 0.0 {
                total += count as f64 * (rad * (1.0 + RADIUS_SLACK)).min(cut).powf(n as f64);
            }
        }
        total
    }
}

/// Free-function form of [`Decomposition::tail_bound`].
pub fn tail_bound(dec: &Decomposition, r: f64, n: u64) -> f64 {
    dec.tail_bound(r, n)
}

#[cfg(test)]
mod tests;
