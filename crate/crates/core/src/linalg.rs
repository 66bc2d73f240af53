//! Dense complex matrix kernels.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::math::{cos, hypot, sin, sqrt};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default relative tolerance for Hermiticity and unitarity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

fn same_shape(x: &CMatrix, y: &CMatrix) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            left_rows: x.nrows(),
            left_cols: x.ncols(),
            right_rows: y.nrows(),
            right_cols: y.ncols(),
        });
    }
    Ok(())
}

/// Real Hilbert-Schmidt inner product `Re Tr(X† Y)`.
pub fn hs_inner(x: &CMatrix, y: &CMatrix) -> Result<f64> {
    same_shape(x, y)?;
    Ok(x.iter()
        .zip(y.iter())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum())
}

pub fn hs_norm(x: &CMatrix) -> f64 {
    sqrt(hs_norm_sqr(x))
}

pub fn hs_norm_sqr(x: &CMatrix) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diagonal(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// `‖H − H†‖`
pub fn hermitian_residual(h: &CMatrix) -> f64 {
    hs_norm(&(h - h.adjoint()))
}

/// `‖X + X†‖`
pub fn skew_residual(x: &CMatrix) -> f64 {
    hs_norm(&(x + x.adjoint()))
}

/// `‖U†U − I‖`
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.ncols();
    hs_norm(&(u.adjoint() * u - identity(n)))
}

pub fn is_unitary(u: &CMatrix) -> bool {
    u.is_square() && unitarity_residual(u) <= DEFAULT_TOL * u.nrows().max(1) as f64
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            left_rows: m.nrows(),
            left_cols: m.ncols(),
            right_rows: m.ncols(),
            right_cols: m.nrows(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok(m.nrows())
}

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

pub fn hermitian_eig(h: &CMatrix) -> Result<HermitianEig> {
    hermitian_eig_with_tol(h, DEFAULT_TOL)
}

/// Eigendecomposition `H = V diag(values) V†`. `tol` bounds `‖H − H†‖`
/// relative to `‖H‖`.
pub fn hermitian_eig_with_tol(h: &CMatrix, tol: f64) -> Result<HermitianEig> {
    let n = require_square(h)?;
    let residual = hermitian_residual(h);
    if residual > tol * hs_norm(h) {
        return Err(Error::NotHermitian { residual });
    }
    let hs = (h + h.adjoint()).scale(0.5);
    let (q, mut d, mut e) = tridiagonalize(hs);
    // nalgebra's symmetric_eigen (real and complex) returns inaccurate
    // eigenvectors when eigenvalues repeat, so the tridiagonal stage is ours.
    let z = tridiagonal_ql(&mut d, &mut e)?;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence);
    }
    let re = q.map(|c| c.re) * &z;
    let im = q.map(|c| c.im) * &z;
    let values = d;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let values = order.iter().map(|&i| values[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| {
        Complex64::new(re[(r, order[c])], im[(r, order[c])])
    });
    Ok(HermitianEig { values, vectors })
}

/// Householder reduction `H = Q T Q†` of a Hermitian matrix, with the phases
/// folded into `Q` so that `T` is real symmetric tridiagonal. Returns `Q`, the
/// diagonal and the subdiagonal of `T`.
fn tridiagonalize(mut a: CMatrix) -> (CMatrix, Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut q = identity(n);
    let mut sub = alloc::vec![ZERO; n.saturating_sub(1)];
    let mut p = alloc::vec![ZERO; n];
    let mut r = alloc::vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        let s = k + 1;
        let m = n - s;
        let alpha = sqrt((s..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>());
        let x0 = a[(s, k)];
        let tail_zero = (s + 1..n).all(|i| a[(i, k)] == ZERO);
        if alpha == 0.0 || tail_zero {
            sub[k] = x0;
            continue;
        }
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let beta = -phase * alpha;
        let mut u: Vec<Complex64> = (s..n).map(|i| a[(i, k)]).collect();
        u[0] -= beta;
        let un = sqrt(u.iter().map(|z| z.norm_sqr()).sum::<f64>());
        u.iter_mut().for_each(|z| *z /= un);
        sub[k] = beta;
        // trailing block A ← A − 2 u q† − 2 q u† with q = A u − (u†Au) u
        p[..m].fill(ZERO);
        for j in 0..m {
            let uj = u[j];
            let col = a.column(s + j);
            for i in 0..m {
                p[i] += col[s + i] * uj;
            }
        }
        let kk: f64 = (0..m).map(|i| (u[i].conj() * p[i]).re).sum();
        for i in 0..m {
            p[i] -= u[i] * kk;
        }
        for j in 0..m {
            let (uj, pj) = (u[j].conj() * 2.0, p[j].conj() * 2.0);
            let mut col = a.column_mut(s + j);
            for i in 0..m {
                col[s + i] -= u[i] * pj + p[i] * uj;
            }
        }
        // Q ← Q (I − 2 u u†)
        r.fill(ZERO);
        for j in 0..m {
            let uj = u[j];
            let col = q.column(s + j);
            for i in 0..n {
                r[i] += col[i] * uj;
            }
        }
        for j in 0..m {
            let uj = u[j].conj() * 2.0;
            let mut col = q.column_mut(s + j);
            for i in 0..n {
                col[i] -= r[i] * uj;
            }
        }
    }
    // D = diag(d) with d_{k+1} = d_k e_k/|e_k| turns T into D S D† with S real.
    let mut d = ONE;
    let mut off = Vec::with_capacity(sub.len());
    for (k, e) in sub.iter().enumerate() {
        let mag = e.norm();
        if mag > 0.0 {
            d *= e / mag;
        }
        off.push(mag);
        let mut col = q.column_mut(k + 1);
        col.iter_mut().for_each(|z| *z *= d);
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    (q, diag, off)
}

/// Implicit QL with Wilkinson shifts on the symmetric tridiagonal with
/// diagonal `d` and subdiagonal `e`. Eigenvalues are left in `d`; the
/// returned columns are the eigenvectors.
fn tridiagonal_ql(d: &mut [f64], e: &mut Vec<f64>) -> Result<DMatrix<f64>> {
    let n = d.len();
    let mut z = DMatrix::<f64>::identity(n, n);
    e.resize(n, 0.0);
    let mut shift = 0.0;
    let mut tst = 0.0f64;
    for l in 0..n {
        tst = tst.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m + 1 < n && e[m].abs() > f64::EPSILON * tst {
            m += 1;
        }
        let mut iter = 0;
        while m > l {
            iter += 1;
            if iter > 64 {
                return Err(Error::NonConvergence);
            }
            let g = d[l];
            let p = (d[l + 1] - g) / (2.0 * e[l]);
            let r = if p < 0.0 {
                -hypot(p, 1.0)
            } else {
                hypot(p, 1.0)
            };
            d[l] = e[l] / (p + r);
            d[l + 1] = e[l] * (p + r);
            let dl1 = d[l + 1];
            let h = g - d[l];
            for di in &mut d[l + 2..] {
                *di -= h;
            }
            shift += h;

            let mut p = d[m];
            let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
            let (mut s, mut s2) = (0.0, 0.0);
            let el1 = e[l + 1];
            for i in (l..m).rev() {
                c3 = c2;
                c2 = c;
                s2 = s;
                let g = c * e[i];
                let h = c * p;
                let r = hypot(p, e[i]);
                e[i + 1] = s * r;
                s = e[i] / r;
                c = p / r;
                p = c * d[i] - s * g;
                d[i + 1] = h + s * (c * g + s * d[i]);
                let (mut zi, mut zj) = z.columns_range_pair_mut(i, i + 1);
                for (a, b) in zi.iter_mut().zip(zj.iter_mut()) {
                    let t = *b;
                    *b = s * *a + c * t;
                    *a = c * *a - s * t;
                }
            }
            let p = -s * s2 * c3 * el1 * e[l] / dl1;
            e[l] = s * p;
            d[l] = c * p;
            if e[l].abs() <= f64::EPSILON * tst {
                break;
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    Ok(z)
}

/// Exponential of a skew-Hermitian `X` through the spectrum of `iX`.
pub fn expm_skew(x: &CMatrix) -> Result<CMatrix> {
    Ok(SkewExp::new(x)?.at(1.0))
}

/// Cached spectral form of a skew-Hermitian generator, so that
/// `exp(sX)` costs one product per `s`.
#[derive(Debug, Clone)]
pub struct SkewExp {
    /// Eigenvalues of `iX`; `exp(sX) = V diag(e^{-i s h}) V†`.
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

impl SkewExp {
    pub fn new(x: &CMatrix) -> Result<Self> {
        require_square(x)?;
        let residual = skew_residual(x);
        if residual > 1e-12 * hs_norm(x) {
            return Err(Error::NotSkewHermitian { residual });
        }
        let eig = hermitian_eig(&x.map(|z| z * I))?;
        Ok(Self {
            phases: eig.values,
            vectors: eig.vectors,
        })
    }

    pub fn at(&self, s: f64) -> CMatrix {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (c, &h) in self.phases.iter().enumerate() {
            let ph = Complex64::new(cos(s * h), -sin(s * h));
            for z in scaled.column_mut(c).iter_mut() {
                *z *= ph;
            }
        }
        &scaled * v.adjoint()
    }
}

pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * core::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed element of U(n): QR of a Ginibre matrix with the phases
/// of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut g = CMatrix::zeros(n, n);
    // Fill column by column so the draw order is independent of storage.
    for c in 0..n {
        for r in 0..n {
            g[(r, c)] = standard_complex_normal(rng);
        }
    }
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..n {
        let d = r[(c, c)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { ONE };
        for z in q.column_mut(c).iter_mut() {
            *z *= phase;
        }
    }
    Ok(q)
}

/// Haar element of the block-diagonal subgroup `U(a_1) ⊕ … ⊕ U(a_k)`.
pub fn block_haar_unitary<R: Rng + ?Sized>(blocks: &[usize], rng: &mut R) -> Result<CMatrix> {
    let n: usize = blocks.iter().sum();
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut u = CMatrix::zeros(n, n);
    let mut off = 0;
    for &a in blocks {
        if a == 0 {
            continue;
        }
        let b = haar_unitary(a, rng)?;
        u.view_mut((off, off), (a, a)).copy_from(&b);
        off += a;
    }
    Ok(u)
}
