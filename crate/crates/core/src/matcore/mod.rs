//! Dense complex matrices and the kernels every other module builds on.
//!
//! Matrices are row-major. Vectorization is column-stacking:
//! `vec(X)[i + j*D] = X[i, j]`, so that `vec(A X B†) = (conj(B) ⊗ A) vec(X)`.

mod eig;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
#[cfg_attr(test, allow(unused_imports))]
use rand_core::RngCore;
use thiserror::Error;

use crate::mps::KrausSet;
#[allow(unused_imports)]
use num_traits::Float;

pub use eig::{
    dominant_eigs, eigen_decomposition, eigenvalues, schur, EigenPair, Schur, DENSE_LIMIT,
};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix has {len} entries, expected {rows}x{cols}")]
    Length { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
}

pub type Result<T> = core::result::Result<T, LinalgError>;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting bad lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Length {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Real matrix from nested rows; panics on ragged input. Test and
    /// fixture helper.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        // i-k-j order keeps the inner loop contiguous
        for i in 0..n {
            let orow = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(CMatrix {
            rows: n,
            cols: p,
            data: out,
        })
    }

    /// `self · v`.
    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(LinalgError::Shape {
                op: "matvec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Kronecker product; block `(i, j)` is `self[i, j] · other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        let cols = c1 * c2;
        let mut data = vec![ZERO; r1 * r2 * cols];
        for i in 0..r1 {
            for j in 0..c1 {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..r2 {
                    let base = (i * r2 + k) * cols + j * c2;
                    for l in 0..c2 {
                        data[base + l] = a * other[(k, l)];
                    }
                }
            }
        }
        CMatrix {
            rows: r1 * r2,
            cols,
            data,
        }
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                op: "trace",
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &CMatrix,
        op: &'static str,
        f: impl Fn(C64, C64) -> C64,
    ) -> Result<CMatrix> {
        if self.shape() != other.shape() {
            return Err(LinalgError::Shape {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Column-stacking vectorization.
    pub fn vectorize(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    /// Inverse of [`CMatrix::vectorize`] for a `rows × cols` matrix.
    pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> Result<CMatrix> {
        if v.len() != rows * cols {
            return Err(LinalgError::Length {
                rows,
                cols,
                len: v.len(),
            });
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| v[i + j * rows]))
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                op: "pow",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut result = CMatrix::identity(self.rows);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.matmul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.matmul(b)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

pub fn conj_entrywise(a: &CMatrix) -> CMatrix {
    a.conj()
}

pub fn trace(a: &CMatrix) -> Result<C64> {
    a.trace()
}

/// `E(X) = Σ_k A_k X A_k†`, without forming the Liouville matrix.
pub fn apply_cp_map(kraus: &KrausSet, x: &CMatrix) -> Result<CMatrix> {
    let d = kraus.bond_dim();
    if x.shape() != (d, d) {
        return Err(LinalgError::Shape {
            op: "apply_cp_map",
            left: (d, d),
            right: x.shape(),
        });
    }
    let mut out = CMatrix::zeros(d, d);
    for a in kraus.matrices() {
        let ax = a.matmul(x)?;
        // (A X) A† accumulated entrywise: out[i,j] += Σ_l ax[i,l] conj(a[j,l])
        for i in 0..d {
            let axr = ax.row(i);
            for j in 0..d {
                let arow = a.row(j);
                let s: C64 = axr.iter().zip(arow).map(|(p, q)| p * q.conj()).sum();
                out[(i, j)] += s;
            }
        }
    }
    Ok(out)
}

// ---- small vector helpers -------------------------------------------------

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    // ⟨a, b⟩ = Σ conj(a_i) b_i
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn normalize(v: &mut [C64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        for z in v.iter_mut() {
            *z *= inv;
        }
    }
    n
}

/// Orthogonalizes `v` against the orthonormal `basis` (two Gram-Schmidt
/// passes) and returns the remaining norm.
pub(crate) fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(v, -c, b);
        }
    }
    norm2(v)
}

/// Uniform sample in [0, 1).
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard complex Gaussian (independent N(0, 1/2) parts).
pub fn gaussian_c64<R: RngCore + ?Sized>(rng: &mut R) -> C64 {
    let u1 = uniform(rng).max(f64::MIN_POSITIVE);
    let u2 = uniform(rng);
    let r = (-u1.ln()).sqrt();
    let t = core::f64::consts::TAU * u2;
    C64::new(r * t.cos(), r * t.sin())
}

pub fn random_vector<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian_c64(rng)).collect()
}

pub fn random_matrix<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-ish random unitary via Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vector(rng, n);
        if orthogonalize(&mut v, &cols) > 1e-8 {
            normalize(&mut v);
            cols.push(v);
        }
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}
