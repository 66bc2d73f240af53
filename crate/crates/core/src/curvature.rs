//! Extrinsic geometry of a critical submanifold: second fundamental form,
//! shape operators and principal curvatures.
//!
//! Everything is computed in the frame of [`CriticalFrame`], where tangent
//! and normal spaces are spanned by elementary generators and the normal
//! projection is an entry mask.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::combinatorics::CriticalSubmanifold;
use crate::landscape::{
    critical_frame, diagonal_generator, pair_generator, CriticalFrame, LandscapeSpec, PairKind,
    NORMAL_TOL,
};
use crate::linalg::{hs_inner, hs_norm, CMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TangentCategory {
    /// Same O-block, different ρ-block: `U†X` commutes with `U†OU` only.
    ObsOnly,
    /// Same ρ-block, different O-block: commutes with ρ only.
    RhoOnly,
    /// Commutes with both.
    Both,
}

#[derive(Debug, Clone)]
pub struct BasisVector {
    /// Generator in the adapted frame.
    pub frame: CMatrix,
    /// Left-trivialized tangent vector `W Ỹ W†`.
    pub left: CMatrix,
    /// `(j, k)` for pair generators, `(l, l)` for `i|l⟩⟨l|`.
    pub indices: (usize, usize),
    pub kind: Option<PairKind>,
}

#[derive(Debug, Clone)]
pub struct TangentBasis {
    pub u: CMatrix,
    pub frame: CriticalFrame,
    pub obs_only: Vec<BasisVector>,
    pub rho_only: Vec<BasisVector>,
    pub both: Vec<BasisVector>,
    pub normal: Vec<BasisVector>,
}

impl TangentBasis {
    /// Tangent vectors in the order ObsOnly, RhoOnly, Both.
    pub fn tangent(&self) -> impl Iterator<Item = (TangentCategory, &BasisVector)> {
        self.obs_only
            .iter()
            .map(|b| (TangentCategory::ObsOnly, b))
            .chain(self.rho_only.iter().map(|b| (TangentCategory::RhoOnly, b)))
            .chain(self.both.iter().map(|b| (TangentCategory::Both, b)))
    }

    pub fn category_sizes(&self) -> [usize; 3] {
        [self.obs_only.len(), self.rho_only.len(), self.both.len()]
    }

    pub fn dim(&self) -> usize {
        self.obs_only.len() + self.rho_only.len() + self.both.len()
    }

    /// Largest deviation of the Gram matrix of tangent and normal vectors
    /// from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let all: Vec<&CMatrix> = self
            .tangent()
            .map(|(_, b)| &b.left)
            .chain(self.normal.iter().map(|b| &b.left))
            .collect();
        let mut worst = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate().skip(i) {
                let g = hs_inner(a, b).unwrap_or(f64::INFINITY);
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - want).abs());
            }
        }
        worst
    }

    /// Keep only normal entries of a frame matrix.
    fn normal_part(&self, m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        CMatrix::from_fn(n, n, |j, k| {
            if self.frame.in_kernel(j, k) {
                Complex64::new(0.0, 0.0)
            } else {
                m[(j, k)]
            }
        })
    }
}

fn basis_vector(
    frame: &CriticalFrame,
    y: CMatrix,
    indices: (usize, usize),
    kind: Option<PairKind>,
) -> BasisVector {
    BasisVector {
        left: frame.from_frame(&y),
        frame: y,
        indices,
        kind,
    }
}

pub fn tangent_basis(
    spec: &LandscapeSpec,
    sub: &CriticalSubmanifold,
    u: &CMatrix,
) -> Result<TangentBasis> {
    let frame = critical_frame(spec, u)?;
    if frame.table(spec)? != sub.table {
        return Err(Error::InvalidArgument(
            "point does not lie on the given critical submanifold".into(),
        ));
    }
    let n = spec.dim();
    let (mut obs_only, mut rho_only, mut both, mut normal) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for l in 0..n {
        both.push(basis_vector(&frame, diagonal_generator(n, l), (l, l), None));
    }
    for j in 0..n {
        for k in j + 1..n {
            let same_rho = frame.rho_block[j] == frame.rho_block[k];
            let same_obs = frame.obs_block[j] == frame.obs_block[k];
            let target = match (same_obs, same_rho) {
                (true, false) => &mut obs_only,
                (false, true) => &mut rho_only,
                (true, true) => &mut both,
                (false, false) => &mut normal,
            };
            for kind in [PairKind::Real, PairKind::Imag] {
                target.push(basis_vector(
                    &frame,
                    pair_generator(n, j, k, kind),
                    (j, k),
                    Some(kind),
                ));
            }
        }
    }
    Ok(TangentBasis {
        u: u.clone(),
        frame,
        obs_only,
        rho_only,
        both,
        normal,
    })
}

fn sign_of(cat: TangentCategory) -> f64 {
    match cat {
        TangentCategory::ObsOnly => 0.5,
        TangentCategory::RhoOnly => -0.5,
        // S vanishes for these; either sign gives the same result
        TangentCategory::Both => 0.5,
    }
}

/// `S(X, Y)`, left-trivialized: the normal part of `±½ W[X̃, Ỹ]W†`, with `+`
/// when `X` commutes with `U†OU` and `−` when it commutes with ρ.
pub fn second_fundamental_form(
    basis: &TangentBasis,
    x: (TangentCategory, &BasisVector),
    y: &BasisVector,
) -> CMatrix {
    let c = (&x.1.frame * &y.frame - &y.frame * &x.1.frame).scale(sign_of(x.0));
    basis.frame.from_frame(&basis.normal_part(&c))
}

#[derive(Debug, Clone)]
pub struct ShapeOperator {
    pub z: CMatrix,
    /// `⟨A_Z X_a, X_b⟩` in the order of [`TangentBasis::tangent`].
    pub matrix: DMatrix<f64>,
    pub sizes: [usize; 3],
}

impl ShapeOperator {
    /// Eigenvalues, ascending.
    pub fn principal_curvatures(&self) -> Vec<f64> {
        if self.matrix.nrows() == 0 {
            return Vec::new();
        }
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Largest entry outside the ObsOnly×RhoOnly off-diagonal blocks.
    pub fn block_residual(&self) -> f64 {
        let [a, b, _] = self.sizes;
        let in_block = |i: usize, j: usize| {
            (i < a && (a..a + b).contains(&j)) || (j < a && (a..a + b).contains(&i))
        };
        let mut worst = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                if !in_block(i, j) {
                    worst = worst.max(self.matrix[(i, j)].abs());
                }
            }
        }
        worst
    }

    /// `max_k |η_k + η_{rev(k)}|` over the sorted curvatures.
    pub fn pairing_residual(&self) -> f64 {
        let ev = self.principal_curvatures();
        let n = ev.len();
        (0..n)
            .map(|k| (ev[k] + ev[n - 1 - k]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn shape_operator(
    spec: &LandscapeSpec,
    basis: &TangentBasis,
    z: &CMatrix,
) -> Result<ShapeOperator> {
    let n = spec.dim();
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.nrows(),
        });
    }
    let norm = hs_norm(z);
    if (norm - 1.0).abs() > NORMAL_TOL {
        return Err(Error::NotUnitNorm { norm });
    }
    let zt = basis.frame.to_frame(z);
    let tangential = hs_norm(&(&zt - basis.normal_part(&zt)));
    if tangential > NORMAL_TOL {
        return Err(Error::NotNormal {
            residual: tangential,
        });
    }
    // ⟨±½[X̃a, X̃b], Z̃⟩ = ∓½ Re Tr(X̃a [X̃b, Z̃]) for skew-Hermitian inputs
    let tangent: Vec<_> = basis.tangent().collect();
    let d = tangent.len();
    let comm: Vec<CMatrix> = tangent
        .iter()
        .map(|(_, y)| &y.frame * &zt - &zt * &y.frame)
        .collect();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (a, (cat, x)) in tangent.iter().enumerate() {
        let s = sign_of(*cat);
        for (b, cb) in comm.iter().enumerate() {
            let tr: f64 = x
                .frame
                .iter()
                .zip(cb.transpose().iter())
                .map(|(p, q)| (p * q).re)
                .sum();
            m[(a, b)] = -s * tr;
        }
    }
    Ok(ShapeOperator {
        z: z.clone(),
        matrix: m,
        sizes: basis.category_sizes(),
    })
}

/// Uniform unit normal: Gaussian coefficients on the normal basis, normalized.
pub fn random_unit_normal<R: Rng + ?Sized>(basis: &TangentBasis, rng: &mut R) -> Result<CMatrix> {
    if basis.normal.is_empty() {
        return Err(Error::ZeroCodimension);
    }
    let coef: Vec<f64> = basis
        .normal
        .iter()
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let norm = crate::math::sqrt(coef.iter().map(|c| c * c).sum());
    let n = basis.u.nrows();
    let mut zt = CMatrix::zeros(n, n);
    for (c, v) in coef.iter().zip(&basis.normal) {
        zt += v.frame.scale(c / norm);
    }
    Ok(basis.frame.from_frame(&zt))
}

/// `‖Σ_i S(X_i, X_i)‖` over the tangent basis.
pub fn mean_curvature_norm(basis: &TangentBasis) -> f64 {
    let n = basis.u.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for (cat, x) in basis.tangent() {
        acc += second_fundamental_form(basis, (cat, x), x);
    }
    hs_norm(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{
        build_submanifold, enumerate_submanifolds, enumerate_tables, ContingencyTable,
    };
    use crate::landscape::random_critical_point;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn setup(spec: &LandscapeSpec, sub: &CriticalSubmanifold, seed: u64) -> TangentBasis {
        let cp = random_critical_point(spec, &sub.table, &mut rng(seed)).unwrap();
        tangent_basis(spec, sub, &cp.u).unwrap()
    }

    fn random_spec(n: usize, r: &mut ChaCha8Rng) -> LandscapeSpec {
        let side = |r: &mut ChaCha8Rng| {
            let mut m = vec![1usize];
            for _ in 1..n {
                if r.random_bool(0.5) {
                    *m.last_mut().unwrap() += 1;
                } else {
                    m.push(1);
                }
            }
            let v: Vec<f64> = (0..m.len())
                .map(|i| 1.0 - (i as f64 + 0.5 * r.random::<f64>()) / m.len() as f64)
                .collect();
            (v, m)
        };
        let (a, b) = side(r);
        let (c, d) = side(r);
        LandscapeSpec::new(a, b, c, d).unwrap()
    }

    #[test]
    fn category_sizes_examples() {
        let s = LandscapeSpec::rank_one(5).unwrap();
        let subs = enumerate_submanifolds(&s, 10).unwrap();
        let b = setup(&s, &subs[0], 1);
        assert_eq!(b.category_sizes(), [0, 0, subs[0].dim]);
        let s4 = LandscapeSpec::rank_one(4).unwrap();
        let subs4 = enumerate_submanifolds(&s4, 10).unwrap();
        let b = setup(&s4, &subs4[1], 2);
        assert_eq!(b.category_sizes(), [4, 4, 6]);
        assert_eq!(b.dim(), 14);
        let vals = vec![3.0, 1.0, 0.5, -1.0];
        let nd = LandscapeSpec::new(vals.clone(), vec![1; 4], vals, vec![1; 4]).unwrap();
        for sub in enumerate_submanifolds(&nd, 100).unwrap() {
            let b = setup(&nd, &sub, 3);
            assert_eq!(b.category_sizes(), [0, 0, 4]);
        }
    }

    #[test]
    fn basis_is_orthonormal_with_expected_counts() {
        let mut r = rng(4);
        for n in 2..=6 {
            let s = random_spec(n, &mut r);
            let sq = |v: &[usize]| v.iter().map(|a| a * a).sum::<usize>();
            for t in enumerate_tables(&s, 1000).unwrap().iter().take(5) {
                let sub = build_submanifold(&s, t).unwrap();
                let b = setup(&s, &sub, r.random());
                let k2 = t.sum_of_squares();
                assert_eq!(
                    b.category_sizes(),
                    [sq(s.obs_mults()) - k2, sq(s.rho_mults()) - k2, k2]
                );
                assert_eq!(b.normal.len(), sub.codim);
                assert!(b.orthonormality_residual() <= 1e-10);
            }
        }
    }

    #[test]
    fn rejects_point_on_other_submanifold() {
        let s = LandscapeSpec::rank_one(3).unwrap();
        let subs = enumerate_submanifolds(&s, 10).unwrap();
        let cp = random_critical_point(&s, &subs[0].table, &mut rng(5)).unwrap();
        assert!(tangent_basis(&s, &subs[1], &cp.u).is_err());
    }

    #[test]
    fn same_category_and_both_category_vanish() {
        let mut r = rng(6);
        for n in 3..=6 {
            let s = random_spec(n, &mut r);
            for t in enumerate_tables(&s, 1000).unwrap().iter().take(4) {
                let sub = build_submanifold(&s, t).unwrap();
                let b = setup(&s, &sub, r.random());
                let all: Vec<_> = b.tangent().collect();
                for &(cx, x) in &all {
                    for &(cy, y) in &all {
                        let sxy = second_fundamental_form(&b, (cx, x), y);
                        if cx == cy || cx == TangentCategory::Both || cy == TangentCategory::Both {
                            assert!(hs_norm(&sxy) < 1e-13);
                        }
                        // symmetric in its arguments
                        let syx = second_fundamental_form(&b, (cy, y), x);
                        assert!(hs_norm(&(sxy - syx)) < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn rank_one_min_paired_form() {
        // Frame indices: 0 carries λ=1, σ=0; 1 carries λ=0, σ=1; j ≥ 2 zero/zero.
        let n = 5;
        let s = LandscapeSpec::rank_one(n).unwrap();
        let sub = enumerate_submanifolds(&s, 10).unwrap().remove(1);
        let b = setup(&s, &sub, 7);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let ci = Complex64::new(0.0, h);
        let cr = Complex64::new(h, 0.0);
        for j in 2..n {
            for (w, v, z) in [
                (cr, cr, cr),
                (ci, cr, cr),
                (ci, ci, cr),
                (cr, ci, ci),
                (ci, ci, ci),
            ] {
                let mut xt = CMatrix::zeros(n, n);
                xt[(0, j)] = w;
                xt[(j, 0)] = -w.conj();
                let mut yt = CMatrix::zeros(n, n);
                yt[(1, j)] = v;
                yt[(j, 1)] = -v.conj();
                let mut zt = CMatrix::zeros(n, n);
                zt[(0, 1)] = z;
                zt[(1, 0)] = -z.conj();
                let x = BasisVector {
                    left: b.frame.from_frame(&xt),
                    frame: xt,
                    indices: (0, j),
                    kind: None,
                };
                let y = BasisVector {
                    left: b.frame.from_frame(&yt),
                    frame: yt,
                    indices: (1, j),
                    kind: None,
                };
                let sxy = second_fundamental_form(&b, (TangentCategory::ObsOnly, &x), &y);
                let got = hs_inner(&sxy, &b.frame.from_frame(&zt)).unwrap();
                let want = -(w.conj() * v * z).re;
                assert!((got - want).abs() < 1e-14, "{got} {want}");
            }
        }
    }

    #[test]
    fn rank_one_min_principal_curvatures() {
        let eta = 1.0 / (2.0 * core::f64::consts::SQRT_2);
        for n in [4usize, 5] {
            let s = LandscapeSpec::rank_one(n).unwrap();
            let sub = enumerate_submanifolds(&s, 10).unwrap().remove(1);
            let b = setup(&s, &sub, 8);
            let mut r = rng(9);
            for _ in 0..5 {
                let z = random_unit_normal(&b, &mut r).unwrap();
                let a = shape_operator(&s, &b, &z).unwrap();
                let ev = a.principal_curvatures();
                let neg = ev.iter().filter(|e| (*e + eta).abs() < 1e-8).count();
                let pos = ev.iter().filter(|e| (*e - eta).abs() < 1e-8).count();
                let zero = ev.iter().filter(|e| e.abs() < 1e-8).count();
                assert_eq!((neg, pos, zero), (2 * n - 4, 2 * n - 4, n * n - 4 * n + 6));
                assert!(a.trace().abs() <= 1e-12);
            }
            assert!(mean_curvature_norm(&b) <= 1e-10);
        }
    }

    #[test]
    fn totally_geodesic_cases() {
        let s = LandscapeSpec::rank_one(4).unwrap();
        let sub = enumerate_submanifolds(&s, 10).unwrap().remove(0);
        let b = setup(&s, &sub, 10);
        let z = random_unit_normal(&b, &mut rng(11)).unwrap();
        assert_eq!(shape_operator(&s, &b, &z).unwrap().matrix.amax(), 0.0);
        assert_eq!(mean_curvature_norm(&b), 0.0);
        let vals = vec![2.0, 1.0, 0.0];
        let nd = LandscapeSpec::new(vals.clone(), vec![1; 3], vals, vec![1; 3]).unwrap();
        for sub in enumerate_submanifolds(&nd, 10).unwrap() {
            let b = setup(&nd, &sub, 12);
            let z = random_unit_normal(&b, &mut rng(13)).unwrap();
            assert!(shape_operator(&nd, &b, &z).unwrap().matrix.amax() <= 1e-12);
        }
    }

    #[test]
    fn random_shape_operator_invariants() {
        let mut r = rng(14);
        for _ in 0..30 {
            let n = r.random_range(2..=8);
            let s = random_spec(n, &mut r);
            let tables = enumerate_tables(&s, 100_000).unwrap();
            let t = &tables[r.random_range(0..tables.len())];
            let sub = build_submanifold(&s, t).unwrap();
            if sub.codim == 0 {
                continue;
            }
            let b = setup(&s, &sub, r.random());
            let z = random_unit_normal(&b, &mut r).unwrap();
            let a = shape_operator(&s, &b, &z).unwrap();
            assert!(a.trace().abs() <= 1e-12);
            assert!(a.symmetry_residual() <= 1e-12);
            assert!(a.block_residual() <= 1e-10);
            assert!(a.pairing_residual() <= 1e-10);
            let [c1, c2, _] = a.sizes;
            if c1 == 0 || c2 == 0 {
                assert!(a.matrix.amax() <= 1e-12);
            }
            assert!(mean_curvature_norm(&b) <= 1e-10);
        }
    }

    #[test]
    fn shape_operator_rejects_tangent_direction() {
        let s = LandscapeSpec::rank_one(3).unwrap();
        let sub = build_submanifold(
            &s,
            &ContingencyTable::from_rows(&[vec![0, 1], vec![1, 1]]).unwrap(),
        )
        .unwrap();
        let b = setup(&s, &sub, 15);
        let z = b.rho_only[0].left.clone();
        assert!(matches!(
            shape_operator(&s, &b, &z),
            Err(Error::NotNormal { .. })
        ));
    }
}
