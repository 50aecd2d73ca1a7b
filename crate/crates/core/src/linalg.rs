//! Dense real symmetric matrices and the spectral tools the detectors need.
//!
//! The eigensolver is a cyclic Jacobi iteration. It is slower than a
//! tridiagonal QR for large inputs but is accurate to a few ulps on the
//! small operators used here and is fully deterministic: identical input
//! always yields bit-identical output.

use std::fmt;

use crate::error::{check_dim, Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 64;

/// Off-diagonal norm (relative to the Frobenius norm) at which iteration stops.
const CONVERGED: f64 = 1e-15;

/// Off-diagonal norm still accepted after `MAX_SWEEPS`.
const ACCEPTABLE: f64 = 1e-12;

/// Eigenvalues with `|w| <= ZERO_REL_TOL * max|w|` count as zero.
pub const ZERO_REL_TOL: f64 = 1e-12;

/// PSD tolerance: min eigenvalue may go down to `-PSD_REL_TOL * max eigenvalue`.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Support tolerance for pseudo-inverse square roots.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

/// Components at or below this magnitude are skipped by the sign convention.
const SIGN_TOL: f64 = 1e-12;

/// A real symmetric matrix stored densely in row-major order.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be positive");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, replacing each off-diagonal pair
    /// by its mean so the result is exactly symmetric.
    pub fn from_row_major(dim: usize, mut data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimension must be positive".into(),
            ));
        }
        check_dim(dim * dim, data.len())?;
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite matrix entry {bad}"
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let mean = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = mean;
                data[j * dim + i] = mean;
            }
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// `|v><v|`
    pub fn outer(v: &[f64]) -> Self {
        Self::outer_scaled(v, 1.0)
    }

    /// `scale * |v><v|`
    pub fn outer_scaled(v: &[f64], scale: f64) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = scale * (v[i] * v[j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `Tr(self * other)`, which for symmetric operands is the entrywise inner product.
    pub fn trace_product(&self, other: &SymMatrix) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// `<x|self|x>`
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .rows()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(x).map(|(a, xj)| a * xj).sum::<f64>())
            .sum())
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c * other`
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> Result<SymMatrix> {
        check_dim(self.dim, other.dim)?;
        Ok(SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.add_scaled(other, -1.0)
    }

    /// Plain (generally non-symmetric) product, row-major.
    pub fn product(&self, other: &SymMatrix) -> Result<Vec<f64>> {
        check_dim(self.dim, other.dim)?;
        Ok(matmul(self.dim, &self.data, &other.data))
    }

    /// `self * inner * self`, symmetric whenever `self` and `inner` are.
    pub fn sandwich(&self, inner: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, inner.dim)?;
        let left = matmul(self.dim, &self.data, &inner.data);
        Self::from_row_major(self.dim, matmul(self.dim, &left, &self.data))
    }

    /// `||self^2 - self||_F`; zero for an exact projector.
    pub fn idempotency_defect(&self) -> f64 {
        let sq = matmul(self.dim, &self.data, &self.data);
        frobenius_diff(&sq, &self.data)
    }

    pub fn distance(&self, other: &SymMatrix) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(frobenius_diff(&self.data, &other.data))
    }

    /// Smallest eigenvalue; used by PSD checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let es = eigh(self)?;
        Ok(*es.eigenvalues.last().expect("dim >= 1"))
    }

    /// Returns the matrix padded with zero rows/columns up to `dim`.
    pub fn padded(&self, dim: usize) -> SymMatrix {
        if dim <= self.dim {
            return self.clone();
        }
        let mut out = SymMatrix::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i * dim + j] = self.get(i, j);
            }
        }
        out
    }
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub(crate) fn frobenius(data: &[f64]) -> f64 {
    data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn frobenius_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalues sorted descending with matching orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(w) V^T`
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for (w, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] += w * v[i] * v[j];
                }
            }
        }
        SymMatrix::from_row_major(n, data).expect("square by construction")
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, w| m.max(w.abs()))
    }

    /// Classifies each eigenvalue against the relative zero tolerance.
    pub fn sign_of(&self, k: usize) -> Spectrum {
        let cutoff = ZERO_REL_TOL * self.spectral_radius();
        let w = self.eigenvalues[k];
        if w > cutoff {
            Spectrum::Positive
        } else if w < -cutoff {
            Spectrum::Negative
        } else {
            Spectrum::Zero
        }
    }
}

/// Part of the spectrum selected by [`projector_from_eigenspace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spectrum {
    Positive,
    Negative,
    Zero,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come back sorted descending; each eigenvector has its first
/// non-negligible component positive.
pub fn eigh(m: &SymMatrix) -> Result<EigenSystem> {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let scale = frobenius(&a);

    let mut off = off_diagonal_norm(n, &a);
    let mut sweeps = 0;
    while off > CONVERGED * scale && sweeps < MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(n, &mut a, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(n, &a);
        sweeps += 1;
    }
    if off > ACCEPTABLE * scale {
        return Err(Error::Convergence { residual: off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));

    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
            apply_sign_convention(&mut col);
            col
        })
        .collect();
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(n: usize, a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(n: usize, a: &mut [f64], v: &mut [f64], p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_finite() {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + theta.hypot(1.0))
    } else {
        0.0
    };
    if t == 0.0 {
        return;
    }
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    // Keep the working matrix exactly symmetric.
    for k in 0..n {
        if k != p && k != q {
            let kp = 0.5 * (a[k * n + p] + a[p * n + k]);
            a[k * n + p] = kp;
            a[p * n + k] = kp;
            let kq = 0.5 * (a[k * n + q] + a[q * n + k]);
            a[k * n + q] = kq;
            a[q * n + k] = kq;
        }
    }

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

pub(crate) fn apply_sign_convention(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_TOL) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Sum of `|v><v|` over eigenvectors whose eigenvalue falls in `part`.
pub fn projector_from_eigenspace(es: &EigenSystem, part: Spectrum) -> SymMatrix {
    let n = es.dim();
    let mut data = vec![0.0; n * n];
    for (k, vec) in es.eigenvectors.iter().enumerate() {
        if es.sign_of(k) != part {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += vec[i] * vec[j];
            }
        }
    }
    SymMatrix::from_row_major(n, data).expect("square by construction")
}

/// Pseudo-inverse square root of a PSD matrix, restricted to its support.
///
/// Eigenvalues below `SUPPORT_REL_TOL * max` map to zero, so `R m R` is the
/// projector onto the support of `m`.
pub fn inv_sqrt_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let es = eigh(m)?;
    let max = es.eigenvalues[0];
    let min = *es.eigenvalues.last().expect("dim >= 1");
    if min < -PSD_REL_TOL * max.max(0.0) || (max <= 0.0 && min < 0.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    let cutoff = SUPPORT_REL_TOL * max;
    let n = es.dim();
    let mut data = vec![0.0; n * n];
    for (w, v) in es.eigenvalues.iter().zip(&es.eigenvectors) {
        if *w <= cutoff || *w <= 0.0 {
            continue;
        }
        let f = 1.0 / w.sqrt();
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += f * v[i] * v[j];
            }
        }
    }
    SymMatrix::from_row_major(n, data)
}

/// Rank of a PSD matrix under the support tolerance.
pub fn support_rank(m: &SymMatrix) -> Result<usize> {
    let es = eigh(m)?;
    let cutoff = SUPPORT_REL_TOL * es.eigenvalues[0];
    Ok(es
        .eigenvalues
        .iter()
        .filter(|&&w| w > cutoff && w > 0.0)
        .count())
}

/// `sum |w_i|`
pub fn trace_norm(m: &SymMatrix) -> Result<f64> {
    Ok(eigh(m)?.eigenvalues.iter().map(|w| w.abs()).sum())
}
