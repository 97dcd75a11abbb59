//! Eigenvalue kernels: complex Schur form by Hessenberg reduction and
//! shifted QR, and a dominant-eigenpair solver that switches to block power
//! iteration for large operators.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg_attr(test, allow(unused_imports))]
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dot, norm2, normalize, orthogonalize, random_vector, CMatrix, LinalgError, Result, C64, ONE, ZERO};
#[allow(unused_imports)]
use num_traits::Float;

/// Operators up to this dimension are materialized and solved densely.
pub const DENSE_LIMIT: usize = 1024;

const SUBSPACE_MAX_ITERS: usize = 4000;
const SUBSPACE_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// Unit 2-norm.
    pub vector: Vec<C64>,
}

/// `A = Z T Z†` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: CMatrix,
    pub z: Option<CMatrix>,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.rows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Eigenvector for the `k`-th diagonal entry of `T`, mapped back through
    /// `Z`. Requires the Schur vectors.
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let t = &self.t;
        let n = t.rows();
        let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
        let small = f64::EPSILON * tnorm;
        let lambda = t[(k, k)];
        let mut y = vec![ZERO; k + 1];
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for m in j + 1..=k {
                s += t[(j, m)] * y[m];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[j] = -s / d;
            let big = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                for z in y.iter_mut() {
                    *z /= big;
                }
            }
        }
        let mut x = match &self.z {
            Some(z) => (0..n)
                .map(|i| (0..=k).map(|m| z[(i, m)] * y[m]).sum())
                .collect::<Vec<C64>>(),
            None => {
                let mut full = vec![ZERO; n];
                full[..=k].copy_from_slice(&y);
                full
            }
        };
        normalize(&mut x);
        x
    }
}

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

fn check_square(a: &CMatrix, op: &'static str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(LinalgError::NotSquare {
            op,
            rows: a.rows(),
            cols: a.cols(),
        })
    }
}

/// Reduces `h` to upper Hessenberg form in place, accumulating the
/// similarity into `z` when given.
fn hessenberg(h: &mut CMatrix, mut z: Option<&mut CMatrix>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let mut xnorm = 0.0;
        for i in 0..len {
            v[i] = h[(k + 1 + i, k)];
            xnorm += v[i].norm_sqr();
        }
        let xnorm = xnorm.sqrt();
        if xnorm <= f64::MIN_POSITIVE {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        v[0] += phase * xnorm;
        let vn = norm2(&v[..len]);
        if vn <= f64::MIN_POSITIVE {
            continue;
        }
        for vi in v[..len].iter_mut() {
            *vi /= vn;
        }
        let vs = &v[..len];
        for j in k..n {
            let mut s = ZERO;
            for i in 0..len {
                s += vs[i].conj() * h[(k + 1 + i, j)];
            }
            let s2 = s * 2.0;
            for i in 0..len {
                h[(k + 1 + i, j)] -= vs[i] * s2;
            }
        }
        let apply_right = |m: &mut CMatrix| {
            for i in 0..m.rows() {
                let mut s = ZERO;
                for l in 0..len {
                    s += m[(i, k + 1 + l)] * vs[l];
                }
                let s2 = s * 2.0;
                for l in 0..len {
                    m[(i, k + 1 + l)] -= s2 * vs[l].conj();
                }
            }
        };
        apply_right(h);
        if let Some(zm) = z.as_deref_mut() {
            apply_right(zm);
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition. Schur vectors are accumulated only when
/// `want_vectors` is set.
pub fn schur(a: &CMatrix, want_vectors: bool) -> Result<Schur> {
    check_square(a, "schur")?;
    let n = a.rows();
    let mut h = a.clone();
    let mut z = if want_vectors {
        Some(CMatrix::identity(n))
    } else {
        None
    };
    hessenberg(&mut h, z.as_mut());
    if n <= 1 {
        return Ok(Schur { t: h, z });
    }
    let eps = f64::EPSILON;
    let norm = h.max_abs();
    let tiny = f64::MIN_POSITIVE / eps;
    let max_iters = 60 * n.max(10);
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    let mut rot: Vec<(C64, C64)> = Vec::with_capacity(n);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            let sub = abs1(h[(l, l - 1)]);
            if sub <= eps * s || sub <= tiny.max(eps * eps * norm) {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iters {
            return Err(LinalgError::Convergence {
                iterations: total,
                residual: abs1(h[(hi, hi - 1)]),
            });
        }
        let mu = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(1.5 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
            rot.push((c, s));
            for j in k..n {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = c.conj() * u + s.conj() * v;
                h[(k + 1, j)] = -s * u + c * v;
            }
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            for i in 0..=k + 1 {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u * c + v * s;
                h[(i, k + 1)] = -u * s.conj() + v * c.conj();
            }
            if let Some(zm) = z.as_mut() {
                for i in 0..n {
                    let u = zm[(i, k)];
                    let v = zm[(i, k + 1)];
                    zm[(i, k)] = u * c + v * s;
                    zm[(i, k + 1)] = -u * s.conj() + v * c.conj();
                }
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

/// All eigenvalues, in Schur order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    Ok(schur(a, false)?.eigenvalues())
}

/// Eigenvalues and unit eigenvectors (columns of the returned matrix).
pub fn eigen_decomposition(a: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let s = schur(a, true)?;
    let n = a.rows();
    let mut vecs = CMatrix::zeros(n, n);
    for k in 0..n {
        let v = s.eigenvector(k);
        for i in 0..n {
            vecs[(i, k)] = v[i];
        }
    }
    Ok((s.eigenvalues(), vecs))
}

fn by_modulus_desc(a: &C64, b: &C64) -> Ordering {
    b.norm()
        .partial_cmp(&a.norm())
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal))
}

fn residual(apply: &dyn Fn(&[C64], &mut [C64]), v: &[C64], lambda: C64) -> f64 {
    let mut w = vec![ZERO; v.len()];
    apply(v, &mut w);
    for (wi, vi) in w.iter_mut().zip(v) {
        *wi -= lambda * vi;
    }
    norm2(&w)
}

/// Materializes a linear operator column by column.
pub fn materialize(apply: &dyn Fn(&[C64], &mut [C64]), dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    let mut e = vec![ZERO; dim];
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        e[j] = ONE;
        apply(&e, &mut col);
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
        e[j] = ZERO;
    }
    m
}

/// The `count` eigenpairs of largest modulus of the operator `apply` on
/// `C^dim`, each with residual at most `tol · ‖M‖`.
pub fn dominant_eigs(
    apply: &dyn Fn(&[C64], &mut [C64]),
    dim: usize,
    count: usize,
    tol: f64,
) -> Result<Vec<EigenPair>> {
    let count = count.min(dim);
    if count == 0 {
        return Ok(Vec::new());
    }
    if dim <= DENSE_LIMIT {
        let m = materialize(apply, dim);
        let scale = m.frobenius_norm();
        let s = schur(&m, true)?;
        let vals = s.eigenvalues();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| by_modulus_desc(&vals[i], &vals[j]));
        let mut out = Vec::with_capacity(count);
        for &k in order.iter().take(count) {
            let vector = s.eigenvector(k);
            let value = vals[k];
            let res = residual(apply, &vector, value);
            if res > tol * scale.max(f64::MIN_POSITIVE) && res > 1e3 * f64::EPSILON * scale.max(1.0) {
                return Err(LinalgError::Convergence {
                    iterations: 0,
                    residual: res,
                });
            }
            out.push(EigenPair { value, vector });
        }
        Ok(out)
    } else {
        subspace_eigs(apply, dim, count, tol)
    }
}

/// Block power iteration with Rayleigh-Ritz extraction. Handles several
/// eigenvalues of equal modulus, which plain power iteration cannot.
fn subspace_eigs(
    apply: &dyn Fn(&[C64], &mut [C64]),
    dim: usize,
    count: usize,
    tol: f64,
) -> Result<Vec<EigenPair>> {
    let b = dim.min((2 * count).max(count + 8));
    let mut rng = ChaCha8Rng::seed_from_u64(SUBSPACE_SEED);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(b);
    fill_basis(&mut basis, b, dim, &mut rng);
    let mut images: Vec<Vec<C64>> = vec![vec![ZERO; dim]; b];
    let mut best = f64::INFINITY;
    for it in 0..SUBSPACE_MAX_ITERS {
        for (v, w) in basis.iter().zip(images.iter_mut()) {
            apply(v, w);
        }
        let h = CMatrix::from_fn(b, b, |i, j| dot(&basis[i], &images[j]));
        let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
        let s = schur(&h, true)?;
        let vals = s.eigenvalues();
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| by_modulus_desc(&vals[i], &vals[j]));
        let mut pairs = Vec::with_capacity(count);
        let mut worst: f64 = 0.0;
        for &k in order.iter().take(count) {
            let y = s.eigenvector(k);
            let mut x = vec![ZERO; dim];
            let mut ax = vec![ZERO; dim];
            for (j, yj) in y.iter().enumerate() {
                super::axpy(&mut x, *yj, &basis[j]);
                super::axpy(&mut ax, *yj, &images[j]);
            }
            let nx = normalize(&mut x);
            let mut r = 0.0;
            for (axi, xi) in ax.iter().zip(&x) {
                r += (*axi / nx - vals[k] * xi).norm_sqr();
            }
            worst = worst.max(r.sqrt() / scale);
            pairs.push(EigenPair {
                value: vals[k],
                vector: x,
            });
        }
        best = best.min(worst);
        if worst <= tol && it > 0 {
            return Ok(pairs);
        }
        core::mem::swap(&mut basis, &mut images);
        reorthonormalize(&mut basis, dim, &mut rng);
    }
    Err(LinalgError::Convergence {
        iterations: SUBSPACE_MAX_ITERS,
        residual: best,
    })
}

fn fill_basis(basis: &mut Vec<Vec<C64>>, b: usize, dim: usize, rng: &mut ChaCha8Rng) {
    while basis.len() < b {
        let mut v = random_vector(rng, dim);
        if orthogonalize(&mut v, basis) > 1e-8 {
            normalize(&mut v);
            basis.push(v);
        }
    }
}

fn reorthonormalize(basis: &mut Vec<Vec<C64>>, dim: usize, rng: &mut ChaCha8Rng) {
    let b = basis.len();
    let old = core::mem::take(basis);
    for mut v in old {
        let n0 = norm2(&v);
        let n = orthogonalize(&mut v, basis);
        if n > 1e-10 * n0.max(f64::MIN_POSITIVE) && n > 0.0 {
            normalize(&mut v);
            basis.push(v);
        }
    }
    fill_basis(basis, b, dim, rng);
}
