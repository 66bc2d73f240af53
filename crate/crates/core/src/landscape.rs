//! The landscape `J(U) = Tr(U ρ U† O)` with ρ and O diagonal, its gradient,
//! Hessian and the spectrum at critical points.
//!
//! Tangent vectors at `U` are stored left-trivialized: the skew-Hermitian `X`
//! stands for the tangent vector `U·X`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::combinatorics::{canonical_permutation, ContingencyTable};
use crate::linalg::{
    block_haar_unitary, hermitian_eig, hs_norm, hs_norm_sqr, real_diagonal, skew_residual, CMatrix,
    ONE, ZERO,
};
use crate::math::{cos, sin, sqrt};
use crate::{Error, Result};

/// Relative tolerance used to group numerically equal eigenvalues.
pub const GROUPING_TOL: f64 = 1e-10;

/// Gradient norm below which a point counts as critical.
pub const CRITICAL_TOL: f64 = 1e-8;

/// Tolerance for the normality and unit-norm preconditions of [`f_along_normal`].
pub const NORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeSpec {
    rho_values: Vec<f64>,
    rho_mults: Vec<usize>,
    obs_values: Vec<f64>,
    obs_mults: Vec<usize>,
}

fn check_side(
    values: &[f64],
    mults: &[usize],
    vfield: &'static str,
    mfield: &'static str,
) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::InvalidSpec {
            field: vfield,
            reason: "needs at least one value".into(),
        });
    }
    if values.len() != mults.len() {
        return Err(Error::InvalidSpec {
            field: mfield,
            reason: format!("{} multiplicities for {} values", mults.len(), values.len()),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec {
            field: vfield,
            reason: format!("non-finite value {v}"),
        });
    }
    if let Some(w) = values.windows(2).find(|w| w[0] <= w[1]) {
        return Err(Error::InvalidSpec {
            field: vfield,
            reason: format!(
                "values must be strictly descending ({} then {})",
                w[0], w[1]
            ),
        });
    }
    if mults.contains(&0) {
        return Err(Error::InvalidSpec {
            field: mfield,
            reason: "multiplicities must be positive".into(),
        });
    }
    Ok(mults.iter().sum())
}

fn group_eigenvalues(raw: &[f64], field: &'static str) -> Result<(Vec<f64>, Vec<usize>)> {
    if raw.is_empty() {
        return Err(Error::InvalidSpec {
            field,
            reason: "needs at least one eigenvalue".into(),
        });
    }
    if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec {
            field,
            reason: format!("non-finite eigenvalue {v}"),
        });
    }
    let mut sorted = raw.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let scale = sorted
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut values = Vec::new();
    let mut mults = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i - 1] - sorted[i] > GROUPING_TOL * scale {
            let group = &sorted[start..i];
            values.push(group.iter().sum::<f64>() / group.len() as f64);
            mults.push(group.len());
            start = i;
        }
    }
    Ok((values, mults))
}

fn expand(values: &[f64], mults: &[usize]) -> Vec<f64> {
    values
        .iter()
        .zip(mults)
        .flat_map(|(&v, &m)| core::iter::repeat(v).take(m))
        .collect()
}

fn block_index(mults: &[usize]) -> Vec<usize> {
    mults
        .iter()
        .enumerate()
        .flat_map(|(b, &m)| core::iter::repeat(b).take(m))
        .collect()
}

fn offsets(mults: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(mults.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &m in mults {
        acc += m;
        out.push(acc);
    }
    out
}

impl LandscapeSpec {
    /// Distinct values (strictly descending) with their multiplicities.
    pub fn new(
        rho_values: Vec<f64>,
        rho_mults: Vec<usize>,
        obs_values: Vec<f64>,
        obs_mults: Vec<usize>,
    ) -> Result<Self> {
        let n = check_side(&rho_values, &rho_mults, "rho.values", "rho.multiplicities")?;
        let m = check_side(&obs_values, &obs_mults, "obs.values", "obs.multiplicities")?;
        if n != m {
            return Err(Error::InvalidSpec {
                field: "obs.multiplicities",
                reason: format!("sum to {m} but rho.multiplicities sum to {n}"),
            });
        }
        Ok(Self {
            rho_values,
            rho_mults,
            obs_values,
            obs_mults,
        })
    }

    /// Full eigenvalue lists in any order; equal values are grouped with
    /// relative tolerance [`GROUPING_TOL`].
    pub fn from_eigenvalues(rho: &[f64], obs: &[f64]) -> Result<Self> {
        let (rv, rm) = group_eigenvalues(rho, "rho_eigenvalues")?;
        let (ov, om) = group_eigenvalues(obs, "obs_eigenvalues")?;
        if rho.len() != obs.len() {
            return Err(Error::InvalidSpec {
                field: "obs_eigenvalues",
                reason: format!("{} eigenvalues but rho has {}", obs.len(), rho.len()),
            });
        }
        Self::new(rv, rm, ov, om)
    }

    /// ρ = O = |1⟩⟨1| in dimension `n ≥ 2`.
    pub fn rank_one(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec {
                field: "rho.multiplicities",
                reason: "rank-one family needs N >= 2".into(),
            });
        }
        Self::new(
            vec![1.0, 0.0],
            vec![1, n - 1],
            vec![1.0, 0.0],
            vec![1, n - 1],
        )
    }

    pub fn dim(&self) -> usize {
        self.rho_mults.iter().sum()
    }

    pub fn rho_values(&self) -> &[f64] {
        &self.rho_values
    }

    pub fn rho_mults(&self) -> &[usize] {
        &self.rho_mults
    }

    pub fn obs_values(&self) -> &[f64] {
        &self.obs_values
    }

    pub fn obs_mults(&self) -> &[usize] {
        &self.obs_mults
    }

    /// Full descending eigenvalue list λ_1 ≥ … ≥ λ_N of ρ.
    pub fn rho_diag(&self) -> Vec<f64> {
        expand(&self.rho_values, &self.rho_mults)
    }

    pub fn obs_diag(&self) -> Vec<f64> {
        expand(&self.obs_values, &self.obs_mults)
    }

    /// ρ-block index of each full index.
    pub fn rho_block_of(&self) -> Vec<usize> {
        block_index(&self.rho_mults)
    }

    pub fn obs_block_of(&self) -> Vec<usize> {
        block_index(&self.obs_mults)
    }

    /// Start of each ρ-block, with `N` appended.
    pub fn rho_offsets(&self) -> Vec<usize> {
        offsets(&self.rho_mults)
    }

    pub fn obs_offsets(&self) -> Vec<usize> {
        offsets(&self.obs_mults)
    }

    pub fn rho_matrix(&self) -> CMatrix {
        real_diagonal(&self.rho_diag())
    }

    pub fn obs_matrix(&self) -> CMatrix {
        real_diagonal(&self.obs_diag())
    }

    fn check_dim(&self, u: &CMatrix) -> Result<usize> {
        let n = self.dim();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if u.nrows() != n { u.nrows() } else { u.ncols() },
            });
        }
        Ok(n)
    }
}

/// π pairs λ_j with σ_{π(j)}; its matrix has a 1 at `(π(j), j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairingPermutation(Vec<usize>);

impl PairingPermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &p in &map {
            if p >= map.len() || seen[p] {
                return Err(Error::InvalidPermutation(format!(
                    "{map:?} is not a bijection of 0..{}",
                    map.len()
                )));
            }
            seen[p] = true;
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.0.len();
        let mut p = CMatrix::zeros(n, n);
        for (j, &pj) in self.0.iter().enumerate() {
            p[(pj, j)] = ONE;
        }
        p
    }

    /// σ_{π(j)} for each j.
    pub fn paired_obs(&self, spec: &LandscapeSpec) -> Vec<f64> {
        let sigma = spec.obs_diag();
        self.0.iter().map(|&p| sigma[p]).collect()
    }

    /// Σ_j λ_j σ_{π(j)}
    pub fn critical_value(&self, spec: &LandscapeSpec) -> f64 {
        spec.rho_diag()
            .iter()
            .zip(self.paired_obs(spec))
            .map(|(l, s)| l * s)
            .sum()
    }
}

pub fn eval_j(spec: &LandscapeSpec, u: &CMatrix) -> Result<f64> {
    let n = spec.check_dim(u)?;
    let lam = spec.rho_diag();
    let sig = spec.obs_diag();
    let mut acc = 0.0;
    for b in 0..n {
        for a in 0..n {
            acc += sig[a] * u[(a, b)].norm_sqr() * lam[b];
        }
    }
    Ok(acc)
}

/// `U† O U`
pub fn conjugated_obs(spec: &LandscapeSpec, u: &CMatrix) -> Result<CMatrix> {
    spec.check_dim(u)?;
    let sig = spec.obs_diag();
    let mut ou = u.clone();
    for (r, s) in sig.iter().enumerate() {
        for z in ou.row_mut(r).iter_mut() {
            *z *= *s;
        }
    }
    Ok(u.adjoint() * ou)
}

/// `[M, ρ]` for diagonal ρ: entry (j,k) is `M_jk (λ_k − λ_j)`.
fn commutator_with_rho(m: &CMatrix, lam: &[f64]) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |j, k| m[(j, k)] * (lam[k] - lam[j]))
}

/// Left-trivialized gradient `[U†OU, ρ]`; the Riemannian gradient is `U` times it.
pub fn grad_j(spec: &LandscapeSpec, u: &CMatrix) -> Result<CMatrix> {
    let b = conjugated_obs(spec, u)?;
    Ok(commutator_with_rho(&b, &spec.rho_diag()))
}

pub fn grad_norm(spec: &LandscapeSpec, u: &CMatrix) -> Result<f64> {
    Ok(hs_norm(&grad_j(spec, u)?))
}

/// Left-trivialized Hessian `[[U†OU, X], ρ]` at a critical `U`.
pub fn hess_apply(spec: &LandscapeSpec, u: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    let n = spec.check_dim(u)?;
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.nrows(),
        });
    }
    let b = conjugated_obs(spec, u)?;
    let lam = spec.rho_diag();
    let g = hs_norm(&commutator_with_rho(&b, &lam));
    if g > CRITICAL_TOL {
        return Err(Error::NotCritical { grad_norm: g });
    }
    let bx = &b * x - x * &b;
    Ok(commutator_with_rho(&bx, &lam))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBeta {
    pub j: usize,
    pub k: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianSpectrum {
    /// Distinct nonzero β (ascending) with multiplicities.
    pub entries: Vec<(f64, usize)>,
    /// Smallest nonzero |β|; `None` when the spectrum is all zero.
    pub beta_min: Option<f64>,
    pub zero_multiplicity: usize,
    /// Every index pair `j < k` with nonzero β, each carrying two eigendirections.
    pub pairs: Vec<PairBeta>,
}

impl HessianSpectrum {
    pub fn nonzero_multiplicity(&self) -> usize {
        2 * self.pairs.len()
    }

    /// ln Π|β_i| over the nonzero eigenvalues with multiplicity. Equal |β|
    /// are grouped so a uniform spectrum gives exactly `c·ln|β|`.
    pub fn ln_abs_product(&self) -> f64 {
        let mut mags: Vec<f64> = self.pairs.iter().map(|p| p.beta.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        let mut i = 0;
        while i < mags.len() {
            let mut j = i + 1;
            while j < mags.len() && mags[j] == mags[i] {
                j += 1;
            }
            acc += (2 * (j - i)) as f64 * crate::math::ln(mags[i]);
            i = j;
        }
        acc
    }
}

pub fn hessian_spectrum(
    spec: &LandscapeSpec,
    pairing: &PairingPermutation,
) -> Result<HessianSpectrum> {
    let n = spec.dim();
    if pairing.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pairing.len(),
        });
    }
    let lam = spec.rho_diag();
    let sig = pairing.paired_obs(spec);
    let rb = spec.rho_block_of();
    let ob = spec.obs_block_of();
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            // zero exactly when the pair shares a ρ-block or an O-block
            if rb[j] == rb[k] || ob[pairing.image(j)] == ob[pairing.image(k)] {
                continue;
            }
            let beta = -(lam[j] - lam[k]) * (sig[j] - sig[k]);
            pairs.push(PairBeta { j, k, beta });
        }
    }
    let mut betas: Vec<f64> = pairs.iter().map(|p| p.beta).collect();
    betas.sort_by(f64::total_cmp);
    let scale = betas.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mut entries: Vec<(f64, usize)> = Vec::new();
    for b in betas {
        match entries.last_mut() {
            Some((v, m)) if (b - *v).abs() <= 1e-12 * scale => *m += 2,
            _ => entries.push((b, 2)),
        }
    }
    let beta_min = pairs.iter().map(|p| p.beta.abs()).reduce(f64::min);
    Ok(HessianSpectrum {
        entries,
        beta_min,
        zero_multiplicity: n * n - 2 * pairs.len(),
        pairs,
    })
}

/// `U = V P W†` on the critical submanifold of `pairing`.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub u: CMatrix,
    /// Block-diagonal over the O-blocks.
    pub v: CMatrix,
    /// Block-diagonal over the ρ-blocks.
    pub w: CMatrix,
    pub pairing: PairingPermutation,
}

pub fn critical_point_for_pairing<R: Rng + ?Sized>(
    spec: &LandscapeSpec,
    pairing: &PairingPermutation,
    rng: &mut R,
) -> Result<CriticalPoint> {
    if pairing.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: pairing.len(),
        });
    }
    let v = block_haar_unitary(spec.obs_mults(), rng)?;
    let w = block_haar_unitary(spec.rho_mults(), rng)?;
    let u = &v * pairing.matrix() * w.adjoint();
    Ok(CriticalPoint {
        u,
        v,
        w,
        pairing: pairing.clone(),
    })
}

/// Random point of the critical submanifold indexed by `table`, using its
/// canonical pairing.
pub fn random_critical_point<R: Rng + ?Sized>(
    spec: &LandscapeSpec,
    table: &ContingencyTable,
    rng: &mut R,
) -> Result<CriticalPoint> {
    let pairing = canonical_permutation(spec, table)?;
    critical_point_for_pairing(spec, &pairing, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// `(1/√2)(|j⟩⟨k| − |k⟩⟨j|)`
    Real,
    /// `(i/√2)(|j⟩⟨k| + |k⟩⟨j|)`
    Imag,
}

/// Unit skew-Hermitian generator for the pair `j ≠ k` in the diagonal frame.
pub fn pair_generator(n: usize, j: usize, k: usize, kind: PairKind) -> CMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut y = CMatrix::zeros(n, n);
    match kind {
        PairKind::Real => {
            y[(j, k)] = Complex64::new(h, 0.0);
            y[(k, j)] = Complex64::new(-h, 0.0);
        }
        PairKind::Imag => {
            y[(j, k)] = Complex64::new(0.0, h);
            y[(k, j)] = Complex64::new(0.0, h);
        }
    }
    y
}

/// `i|l⟩⟨l|`
pub fn diagonal_generator(n: usize, l: usize) -> CMatrix {
    let mut y = CMatrix::zeros(n, n);
    y[(l, l)] = Complex64::new(0.0, 1.0);
    y
}

impl CriticalPoint {
    /// Left-trivialized tangent `W Ỹ W†` for a generator given in the diagonal frame.
    pub fn from_frame(&self, y: &CMatrix) -> CMatrix {
        &self.w * y * self.w.adjoint()
    }

    /// Hessian eigendirection for pair `(j, k)`; its eigenvalue is β_jk.
    pub fn eigen_direction(&self, j: usize, k: usize, kind: PairKind) -> CMatrix {
        self.from_frame(&pair_generator(self.u.nrows(), j, k, kind))
    }
}

/// Orthonormal frame adapted to a critical point.
///
/// `U†OU` commutes with ρ, so it is block diagonal over the ρ-blocks.
/// Diagonalizing each block gives `W` with `W†(U†OU)W = diag(b)` and
/// `W†ρW = ρ`; every `b_j` is one of the distinct O eigenvalues. In this
/// frame the Hessian is diagonal on the generators `E_jk`, with kernel the
/// pairs sharing a ρ-block or an O-block.
#[derive(Debug, Clone)]
pub struct CriticalFrame {
    pub w: CMatrix,
    pub b: Vec<f64>,
    pub rho_block: Vec<usize>,
    pub obs_block: Vec<usize>,
}

impl CriticalFrame {
    pub fn in_kernel(&self, j: usize, k: usize) -> bool {
        self.rho_block[j] == self.rho_block[k] || self.obs_block[j] == self.obs_block[k]
    }

    /// `W† X W`
    pub fn to_frame(&self, x: &CMatrix) -> CMatrix {
        self.w.adjoint() * x * &self.w
    }

    /// `W Ỹ W†`
    pub fn from_frame(&self, y: &CMatrix) -> CMatrix {
        &self.w * y * self.w.adjoint()
    }

    /// Table of block overlaps realized by this frame.
    pub fn table(&self, spec: &LandscapeSpec) -> Result<ContingencyTable> {
        let c = spec.obs_mults().len();
        let mut e = vec![0usize; spec.rho_mults().len() * c];
        for (r, o) in self.rho_block.iter().zip(&self.obs_block) {
            e[r * c + o] += 1;
        }
        ContingencyTable::new(spec.rho_mults().len(), c, e)
    }
}

pub fn critical_frame(spec: &LandscapeSpec, u: &CMatrix) -> Result<CriticalFrame> {
    let n = spec.check_dim(u)?;
    let g = grad_norm(spec, u)?;
    if g > CRITICAL_TOL {
        return Err(Error::NotCritical { grad_norm: g });
    }
    let bm = conjugated_obs(spec, u)?;
    let off = spec.rho_offsets();
    let mut w = CMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for blk in off.windows(2) {
        let (s, e) = (blk[0], blk[1]);
        let sub = bm.view((s, s), (e - s, e - s)).into_owned();
        let eig = hermitian_eig(&sub)?;
        w.view_mut((s, s), (e - s, e - s)).copy_from(&eig.vectors);
        b[s..e].copy_from_slice(&eig.values);
    }
    let scale = spec.obs_values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut obs_block = Vec::with_capacity(n);
    for &bj in &b {
        let (idx, dist) = spec
            .obs_values()
            .iter()
            .map(|v| (v - bj).abs())
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, d)| if d < acc.1 { (i, d) } else { acc },
            );
        if dist > 1e-7 * scale {
            return Err(Error::NotCritical { grad_norm: g });
        }
        obs_block.push(idx);
    }
    Ok(CriticalFrame {
        w,
        b,
        rho_block: spec.rho_block_of(),
        obs_block,
    })
}

/// Norm of the component of `A` in the kernel of the Hessian at critical `U`.
pub fn normal_residual(spec: &LandscapeSpec, u: &CMatrix, a: &CMatrix) -> Result<f64> {
    let n = spec.check_dim(u)?;
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let frame = critical_frame(spec, u)?;
    let at = frame.to_frame(a);
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if frame.in_kernel(j, k) {
                acc += at[(j, k)].norm_sqr();
            }
        }
    }
    Ok(sqrt(acc))
}

/// `f(s) = ‖[exp(−sA) U†OU exp(sA), ρ]‖²` on `grid`, for a unit normal `A`
/// at a critical `U`.
pub fn f_along_normal(
    spec: &LandscapeSpec,
    u: &CMatrix,
    a: &CMatrix,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let n = spec.check_dim(u)?;
    let g = grad_norm(spec, u)?;
    if g > CRITICAL_TOL {
        return Err(Error::NotCritical { grad_norm: g });
    }
    let norm = hs_norm(a);
    if (norm - 1.0).abs() > NORMAL_TOL {
        return Err(Error::NotUnitNorm { norm });
    }
    let sk = skew_residual(a);
    if sk > 1e-12 * norm {
        return Err(Error::NotSkewHermitian { residual: sk });
    }
    let residual = normal_residual(spec, u, a)?;
    if residual > NORMAL_TOL {
        return Err(Error::NotNormal { residual });
    }
    f_along_unchecked(spec, u, a, grid, n)
}

fn f_along_unchecked(
    spec: &LandscapeSpec,
    u: &CMatrix,
    a: &CMatrix,
    grid: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    // iA = V diag(h) V†, so exp(−sA) B exp(sA) = V C(s) V† with
    // C(s)_jk = B'_jk e^{is(h_j − h_k)}, B' = V†BV. The commutator with ρ
    // becomes C R' − R' C = Y − Y† for Y = C R', R' = V†ρV.
    let ia = a.map(|z| z * Complex64::new(0.0, 1.0));
    let eig = hermitian_eig(&ia)?;
    let v = &eig.vectors;
    let b = conjugated_obs(spec, u)?;
    let bp = v.adjoint() * &b * v;
    let rp = v.adjoint() * (real_diagonal(&spec.rho_diag()) * v);
    let mut c = CMatrix::zeros(n, n);
    let mut phase = vec![ZERO; n];
    let mut out = Vec::with_capacity(grid.len());
    for &s in grid {
        for (p, &h) in phase.iter_mut().zip(&eig.values) {
            *p = Complex64::new(cos(s * h), sin(s * h));
        }
        for k in 0..n {
            let pk = phase[k].conj();
            for j in 0..n {
                c[(j, k)] = bp[(j, k)] * phase[j] * pk;
            }
        }
        let y = &c * &rp;
        let mut f = 0.0;
        for k in 0..n {
            for j in 0..n {
                f += (y[(j, k)] - y[(k, j)].conj()).norm_sqr();
            }
        }
        out.push(f);
    }
    Ok(out)
}

/// `‖grad J(U exp(sX))‖²` evaluated directly, for any `U` and skew `X`.
pub fn grad_norm_sqr_along(spec: &LandscapeSpec, u: &CMatrix, x: &CMatrix, s: f64) -> Result<f64> {
    let e = crate::linalg::expm_skew(&x.scale(s))?;
    Ok(hs_norm_sqr(&grad_j(spec, &(u * e))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{enumerate_tables, ContingencyTable};
    use crate::linalg::{expm_skew, haar_unitary, hs_inner, standard_complex_normal};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_skew(n: usize, r: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| standard_complex_normal(r));
        let x = (&g - g.adjoint()).scale(0.5);
        let nn = hs_norm(&x);
        x.unscale(nn)
    }

    fn antidiag(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { ONE } else { ZERO })
    }

    fn spec2(l: [f64; 2], s: [f64; 2]) -> LandscapeSpec {
        LandscapeSpec::new(l.to_vec(), vec![1, 1], s.to_vec(), vec![1, 1]).unwrap()
    }

    /// ρ and O with a random multiplicity structure and values in [0, 1).
    fn random_spec(n: usize, r: &mut ChaCha8Rng) -> LandscapeSpec {
        let side = |r: &mut ChaCha8Rng| {
            let mut mults = vec![1usize];
            for _ in 1..n {
                if r.random_bool(0.5) {
                    *mults.last_mut().unwrap() += 1;
                } else {
                    mults.push(1);
                }
            }
            let mut vals: Vec<f64> = (0..mults.len())
                .map(|i| {
                    1.0 - i as f64 / mults.len() as f64
                        - 0.3 * r.random::<f64>() / mults.len() as f64
                })
                .collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            (vals, mults)
        };
        let (rv, rm) = side(r);
        let (ov, om) = side(r);
        LandscapeSpec::new(rv, rm, ov, om).unwrap()
    }

    #[test]
    fn spec_validation_names_fields() {
        let e = LandscapeSpec::new(vec![1.0, 0.0], vec![1, 2], vec![1.0], vec![2]).unwrap_err();
        assert!(matches!(
            e,
            Error::InvalidSpec {
                field: "obs.multiplicities",
                ..
            }
        ));
        let e = LandscapeSpec::new(vec![0.0, 1.0], vec![1, 1], vec![1.0], vec![2]).unwrap_err();
        assert!(matches!(
            e,
            Error::InvalidSpec {
                field: "rho.values",
                ..
            }
        ));
        let e = LandscapeSpec::new(vec![1.0], vec![0], vec![1.0], vec![0]).unwrap_err();
        assert!(matches!(
            e,
            Error::InvalidSpec {
                field: "rho.multiplicities",
                ..
            }
        ));
    }

    #[test]
    fn eigenvalue_lists_are_grouped() {
        let s =
            LandscapeSpec::from_eigenvalues(&[0.0, 1.0, 1.0 + 1e-13, 0.5], &[2.0, 2.0, 2.0, 2.0])
                .unwrap();
        assert_eq!(s.rho_mults(), &[2, 1, 1]);
        assert_eq!(s.rho_values()[1], 0.5);
        assert_eq!(s.obs_mults(), &[4]);
    }

    #[test]
    fn eval_j_examples() {
        let s = spec2([1.0, 0.0], [1.0, 0.0]);
        assert_eq!(eval_j(&s, &crate::linalg::identity(2)).unwrap(), 1.0);
        assert_eq!(eval_j(&s, &antidiag(2)).unwrap(), 0.0);
        let mut r = rng(1);
        for _ in 0..20 {
            let u = haar_unitary(2, &mut r).unwrap();
            let p = u[(0, 0)].norm_sqr();
            assert!((eval_j(&s, &u).unwrap() - p).abs() < 1e-14);
            // ‖grad‖² = 2p(1−p)
            let g = grad_norm(&s, &u).unwrap();
            assert!((g * g - 2.0 * p * (1.0 - p)).abs() < 1e-14);
        }
        assert!(matches!(
            eval_j(&s, &crate::linalg::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eval_j_matches_trace_definition() {
        let mut r = rng(2);
        for n in [2, 3, 5] {
            let s = random_spec(n, &mut r);
            let u = haar_unitary(n, &mut r).unwrap();
            let direct = (&u * s.rho_matrix() * u.adjoint() * s.obs_matrix()).trace();
            assert!((direct.re - eval_j(&s, &u).unwrap()).abs() < 1e-13);
            assert!(direct.im.abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut r = rng(3);
        for n in 2..=8 {
            let s = random_spec(n, &mut r);
            let u = haar_unitary(n, &mut r).unwrap();
            let g = grad_j(&s, &u).unwrap();
            for _ in 0..10 {
                let x = random_skew(n, &mut r);
                let h = 1e-5;
                let jp = eval_j(&s, &(&u * expm_skew(&x.scale(h)).unwrap())).unwrap();
                let jm = eval_j(&s, &(&u * expm_skew(&x.scale(-h)).unwrap())).unwrap();
                let fd = (jp - jm) / (2.0 * h);
                let an = hs_inner(&g, &x).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-5 * an.abs().max(hs_norm(&g)) + 1e-9,
                    "{fd} {an}"
                );
            }
        }
    }

    #[test]
    fn hessian_spectrum_examples() {
        for n in 2..7 {
            let s = LandscapeSpec::rank_one(n).unwrap();
            let id = hessian_spectrum(&s, &PairingPermutation::identity(n)).unwrap();
            assert_eq!(id.entries, vec![(-1.0, 2 * n - 2)]);
            let mut swap: Vec<usize> = (0..n).collect();
            swap.swap(0, 1);
            let mn = hessian_spectrum(&s, &PairingPermutation::new(swap).unwrap()).unwrap();
            assert_eq!(mn.entries, vec![(1.0, 2)]);
            assert_eq!(mn.zero_multiplicity, n * n - 2);
        }
        let s = spec2([0.7, 0.3], [0.6, 0.4]);
        let sp = hessian_spectrum(&s, &PairingPermutation::identity(2)).unwrap();
        assert_eq!(sp.entries.len(), 1);
        assert!((sp.entries[0].0 + 0.08).abs() < 1e-15);
        assert_eq!(sp.entries[0].1, 2);
    }

    #[test]
    fn constructed_points_are_critical_with_table_value() {
        let mut r = rng(4);
        for n in 2..=6 {
            let s = random_spec(n, &mut r);
            for t in enumerate_tables(&s, 10_000).unwrap() {
                let cp = random_critical_point(&s, &t, &mut r).unwrap();
                assert!(grad_norm(&s, &cp.u).unwrap() <= 1e-9);
                let v = eval_j(&s, &cp.u).unwrap();
                assert!((v - t.critical_value(&s)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rank_one_max_value_is_one() {
        let s = LandscapeSpec::rank_one(3).unwrap();
        let t = ContingencyTable::new(2, 2, vec![1, 0, 0, 2]).unwrap();
        let cp = random_critical_point(&s, &t, &mut rng(5)).unwrap();
        assert!((eval_j(&s, &cp.u).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn nondegenerate_identity_table_gives_phase_matrix() {
        let s = LandscapeSpec::new(
            vec![3.0, 2.0, 1.0],
            vec![1; 3],
            vec![0.5, 0.2, 0.1],
            vec![1; 3],
        )
        .unwrap();
        let t = ContingencyTable::new(3, 3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        let cp = random_critical_point(&s, &t, &mut rng(6)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(cp.u[(i, j)].norm() < 1e-15);
                }
            }
        }
        assert!((eval_j(&s, &cp.u).unwrap() - (1.5 + 0.4 + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn hessian_eigendirections() {
        let mut r = rng(7);
        for n in 2..=6 {
            let s = random_spec(n, &mut r);
            for t in enumerate_tables(&s, 10_000).unwrap().iter().take(4) {
                let cp = random_critical_point(&s, t, &mut r).unwrap();
                let sp = hessian_spectrum(&s, &cp.pairing).unwrap();
                for p in &sp.pairs {
                    for kind in [PairKind::Real, PairKind::Imag] {
                        let x = cp.eigen_direction(p.j, p.k, kind);
                        let hx = hess_apply(&s, &cp.u, &x).unwrap();
                        assert!(hs_norm(&(hx - x.scale(p.beta))) < 1e-12);
                    }
                }
                for l in 0..n {
                    let x = cp.from_frame(&diagonal_generator(n, l));
                    assert!(hs_norm(&hess_apply(&s, &cp.u, &x).unwrap()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn second_derivative_matches_hessian_form() {
        let mut r = rng(8);
        for n in [2, 3, 4, 6] {
            let s = random_spec(n, &mut r);
            let t = &enumerate_tables(&s, 10_000).unwrap()[0];
            let cp = random_critical_point(&s, t, &mut r).unwrap();
            for _ in 0..5 {
                let x = random_skew(n, &mut r);
                let h = 1e-4;
                let j0 = eval_j(&s, &cp.u).unwrap();
                let jp = eval_j(&s, &(&cp.u * expm_skew(&x.scale(h)).unwrap())).unwrap();
                let jm = eval_j(&s, &(&cp.u * expm_skew(&x.scale(-h)).unwrap())).unwrap();
                let fd = (jp - 2.0 * j0 + jm) / (h * h);
                let an = hs_inner(&x, &hess_apply(&s, &cp.u, &x).unwrap()).unwrap();
                assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-2), "{fd} {an}");
            }
        }
    }

    #[test]
    fn hess_rejects_noncritical() {
        let s = LandscapeSpec::rank_one(2).unwrap();
        let u = expm_skew(&pair_generator(2, 0, 1, PairKind::Real).scale(0.3)).unwrap();
        assert!(matches!(
            hess_apply(&s, &u, &u),
            Err(Error::NotCritical { .. })
        ));
    }

    #[test]
    fn gradient_grows_quadratically_off_critical() {
        // log F vs log s has slope 2 near a critical point
        let mut r = rng(9);
        let s = random_spec(5, &mut r);
        let t = &enumerate_tables(&s, 10_000).unwrap()[1];
        let cp = random_critical_point(&s, t, &mut r).unwrap();
        let x = random_skew(5, &mut r);
        let pts: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let sv = 10f64.powf(-4.0 + 0.25 * i as f64);
                (
                    sv.ln(),
                    grad_norm_sqr_along(&s, &cp.u, &x, sv).unwrap().ln(),
                )
            })
            .collect();
        let slope = crate::asymptotics::least_squares_slope(&pts);
        assert!((slope - 2.0).abs() < 0.02, "{slope}");
    }

    #[test]
    fn f_along_single_eigenvector_is_closed_form() {
        let mut r = rng(10);
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        for n in [3, 5, 8] {
            let s = random_spec(n, &mut r);
            for t in enumerate_tables(&s, 10_000).unwrap().iter().take(3) {
                let cp = random_critical_point(&s, t, &mut r).unwrap();
                let sp = hessian_spectrum(&s, &cp.pairing).unwrap();
                for p in sp.pairs.iter().take(4) {
                    let a = cp.eigen_direction(p.j, p.k, PairKind::Imag);
                    let f = f_along_normal(&s, &cp.u, &a, &grid).unwrap();
                    assert!(f[0] <= 1e-18);
                    for (fv, &sv) in f.iter().zip(&grid) {
                        let want =
                            p.beta * p.beta * sin(core::f64::consts::SQRT_2 * sv).powi(2) / 2.0;
                        assert!((fv - want).abs() <= 1e-8);
                    }
                    // direct evaluation agrees
                    let d = grad_norm_sqr_along(&s, &cp.u, &a, 0.37).unwrap();
                    let f1 = f_along_normal(&s, &cp.u, &a, &[0.37]).unwrap()[0];
                    assert!((d - f1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn f_along_rejects_tangent_and_unnormalized() {
        let s = LandscapeSpec::rank_one(3).unwrap();
        let t = ContingencyTable::new(2, 2, vec![1, 0, 0, 2]).unwrap();
        let cp = random_critical_point(&s, &t, &mut rng(11)).unwrap();
        // pair (1,2) shares the zero ρ-block: tangent
        let a = cp.eigen_direction(1, 2, PairKind::Real);
        assert!(matches!(
            f_along_normal(&s, &cp.u, &a, &[0.1]),
            Err(Error::NotNormal { .. })
        ));
        let a = cp.eigen_direction(0, 1, PairKind::Real).scale(2.0);
        assert!(matches!(
            f_along_normal(&s, &cp.u, &a, &[0.1]),
            Err(Error::NotUnitNorm { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn global_phase_invariance(seed in any::<u64>(), n in 2usize..7, theta in 0.0f64..6.3) {
            let mut r = rng(seed);
            let s = random_spec(n, &mut r);
            let u = haar_unitary(n, &mut r).unwrap();
            let ph = Complex64::new(cos(theta), sin(theta));
            let a = eval_j(&s, &u).unwrap();
            let b = eval_j(&s, &u.map(|z| z * ph)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn j_within_rearrangement_bounds(seed in any::<u64>(), n in 2usize..7) {
            let mut r = rng(seed);
            let s = random_spec(n, &mut r);
            let u = haar_unitary(n, &mut r).unwrap();
            let lam = s.rho_diag();
            let sig = s.obs_diag();
            let hi: f64 = lam.iter().zip(&sig).map(|(a, b)| a * b).sum();
            let lo: f64 = lam.iter().zip(sig.iter().rev()).map(|(a, b)| a * b).sum();
            let j = eval_j(&s, &u).unwrap();
            prop_assert!(j <= hi + 1e-12 && j >= lo - 1e-12);
        }

        #[test]
        fn hessian_is_self_adjoint(seed in any::<u64>(), n in 2usize..7) {
            let mut r = rng(seed);
            let s = random_spec(n, &mut r);
            let tables = enumerate_tables(&s, 10_000).unwrap();
            let t = &tables[(seed as usize) % tables.len()];
            let cp = random_critical_point(&s, t, &mut r).unwrap();
            let x = random_skew(n, &mut r);
            let y = random_skew(n, &mut r);
            let a = hs_inner(&x, &hess_apply(&s, &cp.u, &y).unwrap()).unwrap();
            let b = hs_inner(&hess_apply(&s, &cp.u, &x).unwrap(), &y).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn spectrum_counts_match_dimension(seed in any::<u64>(), n in 2usize..8) {
            let mut r = rng(seed);
            let s = random_spec(n, &mut r);
            for t in enumerate_tables(&s, 10_000).unwrap() {
                let p = canonical_permutation(&s, &t).unwrap();
                let sp = hessian_spectrum(&s, &p).unwrap();
                prop_assert_eq!(sp.zero_multiplicity, t.dimension(&s));
                let nz: usize = sp.entries.iter().map(|e| e.1).sum();
                prop_assert_eq!(nz, n * n - t.dimension(&s));
                prop_assert!(sp.entries.iter().all(|e| e.1 % 2 == 0));
            }
        }
    }
}
