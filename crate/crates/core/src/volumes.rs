//! Hilbert-Schmidt volumes of unitary groups and critical orbits, and the
//! near-critical volume fraction around each orbit.

use core::f64::consts::LN_2;
use core::ops::{Div, DivAssign, Mul, MulAssign};

use crate::combinatorics::CriticalSubmanifold;
use crate::landscape::LandscapeSpec;
use crate::math::{exp, ln, ln_factorial, ln_gamma, ln_superfactorial};
use crate::{Error, Result};

/// `ln(2π)`
pub const LN_TWO_PI: f64 = 1.837_877_066_409_345_5;

/// Error-free transformation: `a + b = s + e` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(2π)^{two_pi_num / 2} · exp(residual)`.
///
/// The exponent of 2π is kept as an exact integer numerator; the residual is a
/// double-double so that long products of factorial ratios stay accurate
/// to well below 1e-12 in the log domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVolume {
    two_pi_num: i64,
    hi: f64,
    lo: f64,
}

impl LogVolume {
    pub const ONE: Self = Self {
        two_pi_num: 0,
        hi: 0.0,
        lo: 0.0,
    };

    /// `(2π)^{num/2}`
    pub fn two_pi_pow_half(num: i64) -> Self {
        Self {
            two_pi_num: num,
            ..Self::ONE
        }
    }

    pub fn from_ln(x: f64) -> Self {
        Self {
            two_pi_num: 0,
            hi: x,
            lo: 0.0,
        }
    }

    /// Numerator `p` of the exponent `p/2` of 2π.
    pub fn two_pi_numerator(&self) -> i64 {
        self.two_pi_num
    }

    pub fn two_pi_exp(&self) -> f64 {
        self.two_pi_num as f64 / 2.0
    }

    /// Natural log of the factor besides the power of 2π.
    pub fn log_residual(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn ln(&self) -> f64 {
        self.two_pi_exp() * LN_TWO_PI + self.log_residual()
    }

    pub fn log10(&self) -> f64 {
        self.ln() / core::f64::consts::LN_10
    }

    /// Linear value; `None` if it over- or underflows `f64`.
    pub fn value(&self) -> Option<f64> {
        let v = exp(self.ln());
        (v.is_finite() && v > 0.0).then_some(v)
    }

    /// `|ln(self / other)|`, exact in the 2π exponent.
    pub fn ln_distance(&self, other: &Self) -> f64 {
        let q = *self / *other;
        (q.two_pi_exp() * LN_TWO_PI + q.hi + q.lo).abs()
    }

    pub fn mul_ln(self, x: f64) -> Self {
        self * Self::from_ln(x)
    }

    pub fn powi(self, k: i64) -> Self {
        Self {
            two_pi_num: self.two_pi_num * k,
            hi: self.hi * k as f64,
            lo: self.lo * k as f64,
        }
    }
}

impl Mul for LogVolume {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (hi, lo) = two_sum(s, e + self.lo + rhs.lo);
        Self {
            two_pi_num: self.two_pi_num + rhs.two_pi_num,
            hi,
            lo,
        }
    }
}

impl Div for LogVolume {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * Self {
            two_pi_num: -rhs.two_pi_num,
            hi: -rhs.hi,
            lo: -rhs.lo,
        }
    }
}

impl MulAssign for LogVolume {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl DivAssign for LogVolume {
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl core::iter::Product for LogVolume {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, Mul::mul)
    }
}

/// Area of the unit sphere `S^{2s+1}`: `2π^{s+1}/s!`.
pub fn vol_odd_sphere(s: usize) -> LogVolume {
    LogVolume::two_pi_pow_half(2 * (s as i64 + 1)).mul_ln(-(s as f64) * LN_2 - ln_factorial(s))
}

/// `2^{(Σa² − Σa)/2}`
pub fn chevalley_cell_volume(a: &[usize]) -> LogVolume {
    let sq: usize = a.iter().map(|x| x * x).sum();
    let sum: usize = a.iter().sum();
    LogVolume::from_ln((sq - sum) as f64 / 2.0 * LN_2)
}

/// `Vol(U(a_1) ⊕ … ⊕ U(a_k)) = (2π)^{(Σa² + Σa)/2} / Π_l Π_{s<a_l} s!`.
/// Zero entries contribute the trivial group.
pub fn vol_unitary_product(a: &[usize]) -> LogVolume {
    let num: usize = a.iter().map(|x| x * x + x).sum();
    a.iter()
        .map(|&x| LogVolume::from_ln(-ln_superfactorial(x)))
        .product::<LogVolume>()
        * LogVolume::two_pi_pow_half(num as i64)
}

/// Same volume through the lattice cell times a product of odd spheres.
pub fn vol_unitary_product_macdonald(a: &[usize]) -> LogVolume {
    let spheres: LogVolume = a.iter().flat_map(|&x| (0..x).map(vol_odd_sphere)).product();
    chevalley_cell_volume(a) * spheres
}

pub fn vol_unitary_group(n: usize) -> LogVolume {
    vol_unitary_product(&[n])
}

/// `(2π)^{(d+N)/2} · Π G(k_ij+1) / (Π G(m_j+1) Π G(n_i+1))`, where
/// `G(a+1) = Π_{s<a} s!`.
pub fn vol_orbit(spec: &LandscapeSpec, sub: &CriticalSubmanifold) -> LogVolume {
    let k: LogVolume = sub
        .table
        .entries()
        .iter()
        .map(|&x| LogVolume::from_ln(ln_superfactorial(x)))
        .product();
    let blocks: LogVolume = spec
        .obs_mults()
        .iter()
        .chain(spec.rho_mults())
        .map(|&x| LogVolume::from_ln(-ln_superfactorial(x)))
        .product();
    LogVolume::two_pi_pow_half((sub.dim + spec.dim()) as i64) * k * blocks
}

/// `Vol(U(m) ⊕ U(n)) / Vol(U(K))`
pub fn vol_orbit_quotient(spec: &LandscapeSpec, sub: &CriticalSubmanifold) -> LogVolume {
    let mut blocks = spec.obs_mults().to_vec();
    blocks.extend_from_slice(spec.rho_mults());
    vol_unitary_product(&blocks) / vol_unitary_product(sub.table.entries())
}

/// Leading-order fraction of U(N) within the near-critical tube of one orbit:
/// `coefficient · ε^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolFracEstimate {
    pub coefficient: LogVolume,
    pub power: usize,
}

impl VolFracEstimate {
    pub fn ln_evaluate(&self, eps: f64) -> f64 {
        self.coefficient.ln() + self.power as f64 * ln(eps)
    }

    pub fn evaluate(&self, eps: f64) -> f64 {
        exp(self.ln_evaluate(eps))
    }
}

fn check_codim(sub: &CriticalSubmanifold) -> Result<f64> {
    if sub.codim == 0 {
        return Err(Error::ZeroCodimension);
    }
    sub.spectrum.beta_min.ok_or(Error::ZeroCodimension)
}

/// `Vol(orbit) · π^{c/2} / (Γ(c/2+1) Vol(U(N)))` with `c = N² − d`; the
/// β-dependent factor is applied by the callers.
fn tube_prefactor(spec: &LandscapeSpec, sub: &CriticalSubmanifold) -> LogVolume {
    let c = sub.codim;
    // π^{c/2} = (2π)^{c/2} 2^{-c/2}
    let ball = LogVolume::two_pi_pow_half(c as i64)
        .mul_ln(-(c as f64) / 2.0 * LN_2 - ln_gamma(c as f64 / 2.0 + 1.0));
    vol_orbit(spec, sub) * ball / vol_unitary_group(spec.dim())
}

/// Volume fraction of the ellipsoidal tube with semi-axes `ε/|β_i|`.
pub fn volfrac_estimate(
    spec: &LandscapeSpec,
    sub: &CriticalSubmanifold,
) -> Result<VolFracEstimate> {
    check_codim(sub)?;
    Ok(VolFracEstimate {
        coefficient: tube_prefactor(spec, sub).mul_ln(-sub.spectrum.ln_abs_product()),
        power: sub.codim,
    })
}

/// Spherical tube of radius `ε/|β_min|`, containing the ellipsoidal one:
/// the ln of its volume fraction.
pub fn ln_spherical_tube_bound(
    spec: &LandscapeSpec,
    sub: &CriticalSubmanifold,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let bmin = check_codim(sub)?;
    let c = sub.codim as f64;
    let coef = tube_prefactor(spec, sub).mul_ln(-(c * ln(bmin)));
    Ok(coef.ln() + c * ln(eps))
}

pub fn spherical_tube_bound(
    spec: &LandscapeSpec,
    sub: &CriticalSubmanifold,
    eps: f64,
) -> Result<f64> {
    Ok(exp(ln_spherical_tube_bound(spec, sub, eps)?))
}

/// Exact near-critical fraction for N = 2 with ρ, O rank one: the gradient
/// norm is `√(2p(1−p))` with `p = |U₁₁|²` uniform on [0, 1].
pub fn rank_one_n2_fraction(eps: f64) -> f64 {
    if eps * eps >= 0.5 {
        1.0
    } else {
        1.0 - crate::math::sqrt(1.0 - 2.0 * eps * eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{
        build_submanifold, enumerate_submanifolds, enumerate_tables, ContingencyTable,
    };
    use alloc::vec;
    use alloc::vec::Vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn two_pi_constant() {
        // libm ln is one ulp low here; the constant is the correctly rounded value
        assert!((LN_TWO_PI - (2.0 * PI).ln()).abs() <= f64::EPSILON * 2.0);
    }

    #[test]
    fn sphere_examples() {
        assert!(close(vol_odd_sphere(0).value().unwrap(), 2.0 * PI, 1e-15));
        assert!(close(
            vol_odd_sphere(1).value().unwrap(),
            2.0 * PI * PI,
            1e-15
        ));
        assert!(close(vol_odd_sphere(2).value().unwrap(), PI.powi(3), 1e-15));
    }

    #[test]
    fn chevalley_examples() {
        assert_eq!(chevalley_cell_volume(&[1]).value().unwrap(), 1.0);
        assert!(close(
            chevalley_cell_volume(&[2]).value().unwrap(),
            2.0,
            1e-15
        ));
        assert!(close(
            chevalley_cell_volume(&[2, 1]).value().unwrap(),
            2.0,
            1e-15
        ));
    }

    #[test]
    fn unitary_product_examples() {
        let v = vol_unitary_product(&[1]);
        assert_eq!((v.two_pi_numerator(), v.log_residual()), (2, 0.0));
        let v = vol_unitary_product(&[2]);
        assert_eq!((v.two_pi_numerator(), v.log_residual()), (6, 0.0));
        let v = vol_unitary_product(&[2, 1]);
        assert_eq!((v.two_pi_numerator(), v.log_residual()), (8, 0.0));
        // sphere product 2·(2π·2π²)·2π = (2π)⁴
        let m = vol_unitary_product_macdonald(&[2, 1]);
        assert!(m.ln_distance(&v) < 1e-14);
        assert_eq!(vol_unitary_product(&[0]), LogVolume::ONE);
    }

    #[test]
    fn u3_volume_closed_form() {
        // Vol(U(3)) = (2π)^6 / (0!·1!·2!)
        let v = vol_unitary_group(3);
        let want = (2.0 * PI).powi(6) / 2.0;
        assert!(close(v.value().unwrap(), want, 1e-14));
    }

    #[test]
    fn orbit_examples() {
        let s = LandscapeSpec::rank_one(3).unwrap();
        let subs = enumerate_submanifolds(&s, 10).unwrap();
        let vmax = vol_orbit(&s, &subs[0]);
        assert_eq!((vmax.two_pi_numerator(), vmax.log_residual()), (8, 0.0));
        let vmin = vol_orbit(&s, &subs[1]);
        assert_eq!((vmin.two_pi_numerator(), vmin.log_residual()), (10, 0.0));
        for n in 1..6 {
            let vals: Vec<f64> = (0..n).map(|i| -(i as f64)).collect();
            let s = LandscapeSpec::new(vals.clone(), vec![1; n], vals, vec![1; n]).unwrap();
            for sub in enumerate_submanifolds(&s, 1000).unwrap() {
                let v = vol_orbit(&s, &sub);
                assert_eq!(
                    (v.two_pi_numerator(), v.log_residual()),
                    (2 * n as i64, 0.0)
                );
            }
        }
    }

    #[test]
    fn rank_one_closed_forms() {
        for n in 2..=8usize {
            let s = LandscapeSpec::rank_one(n).unwrap();
            let subs = enumerate_submanifolds(&s, 10).unwrap();
            let g_n: f64 = (0..n - 1).map(|p| ln_factorial(p)).sum();
            let max = LogVolume::two_pi_pow_half((n * n - n + 2) as i64).mul_ln(-g_n);
            let min = LogVolume::two_pi_pow_half((n * n + n - 2) as i64)
                .mul_ln(-g_n - ln_factorial(n - 2));
            assert!(vol_orbit(&s, &subs[0]).ln_distance(&max) <= 1e-12);
            assert!(vol_orbit(&s, &subs[1]).ln_distance(&min) <= 1e-12);

            let emax = volfrac_estimate(&s, &subs[0]).unwrap();
            assert_eq!(emax.power, 2 * n - 2);
            assert!(close(
                emax.coefficient.value().unwrap(),
                0.5f64.powi(n as i32 - 1),
                1e-13
            ));
            let emin = volfrac_estimate(&s, &subs[1]).unwrap();
            assert_eq!(emin.power, 2);
            assert!(close(
                emin.coefficient.value().unwrap(),
                (n as f64 - 1.0) / 2.0,
                1e-13
            ));
        }
    }

    #[test]
    fn nondegenerate_estimate_closed_form() {
        let lam = [0.9, 0.5, 0.2, -0.4];
        let sig = [1.3, 0.1, -0.2, -0.7];
        let s = LandscapeSpec::new(lam.to_vec(), vec![1; 4], sig.to_vec(), vec![1; 4]).unwrap();
        for sub in enumerate_submanifolds(&s, 100).unwrap() {
            let e = volfrac_estimate(&s, &sub).unwrap();
            assert_eq!(e.power, 12);
            let p = sub.pairing.as_slice();
            let mut prod = 1.0;
            for j in 0..4 {
                for k in j + 1..4 {
                    prod *= ((lam[j] - lam[k]) * (sig[p[j]] - sig[p[k]])).abs().powi(2);
                }
            }
            // Π_{s<4} s! / (2^6 · 6! · Π|β|)
            let want = 12.0 / (64.0 * 720.0 * prod);
            assert!(close(e.coefficient.value().unwrap(), want, 1e-12));
        }
    }

    #[test]
    fn n2_sum_is_eps_squared() {
        let s = LandscapeSpec::rank_one(2).unwrap();
        let subs = enumerate_submanifolds(&s, 10).unwrap();
        for eps in [1e-3, 0.05, 0.1, 0.3] {
            let total: f64 = subs
                .iter()
                .map(|m| volfrac_estimate(&s, m).unwrap().evaluate(eps))
                .sum();
            assert!(close(total, eps * eps, 1e-14));
        }
        // leading order of the exact fraction 1 − √(1 − 2ε²)
        let eps: f64 = 1e-4;
        assert!(close(rank_one_n2_fraction(eps), eps * eps, 1e-7));
    }

    #[test]
    fn bound_examples() {
        let s = LandscapeSpec::rank_one(3).unwrap();
        let subs = enumerate_submanifolds(&s, 10).unwrap();
        assert!(close(
            spherical_tube_bound(&s, &subs[0], 0.1).unwrap(),
            2.5e-5,
            1e-13
        ));
        let e = volfrac_estimate(&s, &subs[1]).unwrap();
        assert!(close(e.evaluate(0.1), 0.01, 1e-13));
        let a = spherical_tube_bound(&s, &subs[1], 0.1).unwrap();
        let b = spherical_tube_bound(&s, &subs[1], 0.2).unwrap();
        assert!(close(b / a, 4.0, 1e-13));
        assert!(matches!(
            spherical_tube_bound(&s, &subs[1], 0.0),
            Err(Error::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn zero_codimension_is_rejected() {
        let s = LandscapeSpec::new(vec![1.0], vec![3], vec![2.0, 1.0], vec![1, 2]).unwrap();
        let t = ContingencyTable::from_rows(&[vec![1, 2]]).unwrap();
        let sub = build_submanifold(&s, &t).unwrap();
        assert_eq!(sub.codim, 0);
        assert_eq!(volfrac_estimate(&s, &sub), Err(Error::ZeroCodimension));
    }

    fn mults() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(1usize..6, 1..4)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn macdonald_matches_closed_form(a in proptest::collection::vec(0usize..80, 1..5)) {
            let c = vol_unitary_product(&a);
            let m = vol_unitary_product_macdonald(&a);
            prop_assert_eq!(c.two_pi_numerator(), m.two_pi_numerator());
            prop_assert!(c.ln_distance(&m) <= 1e-10);
        }

        #[test]
        fn quotient_identity(rm in mults(), om_seed in any::<u64>()) {
            let n: usize = rm.iter().sum();
            // split n into obs blocks deterministically from the seed
            let mut om = Vec::new();
            let mut left = n;
            let mut x = om_seed;
            while left > 0 {
                let take = 1 + (x % left as u64) as usize;
                om.push(take);
                left -= take;
                x /= 7;
            }
            let vals = |k: usize| (0..k).map(|i| 2.0 - i as f64).collect::<Vec<_>>();
            let s = LandscapeSpec::new(vals(rm.len()), rm.clone(), vals(om.len()), om).unwrap();
            for t in enumerate_tables(&s, 100_000).unwrap() {
                let sub = build_submanifold(&s, &t).unwrap();
                let a = vol_orbit(&s, &sub);
                let b = vol_orbit_quotient(&s, &sub);
                prop_assert_eq!(a.two_pi_numerator(), b.two_pi_numerator());
                prop_assert!(a.ln_distance(&b) <= 1e-12);
                if sub.codim > 0 {
                    for eps in [1e-3, 0.1, 0.7, 2.0] {
                        let est = volfrac_estimate(&s, &sub).unwrap().ln_evaluate(eps);
                        let bound = ln_spherical_tube_bound(&s, &sub, eps).unwrap();
                        prop_assert!(bound >= est);
                    }
                }
            }
        }
    }
}
