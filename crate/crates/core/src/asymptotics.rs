//! Embedding sequence `ρ^z = ρ⁰ ⊕ 0_z`, `O^z = O⁰ ⊕ 0_z` and the growth of
//! the spherical tube bound along it.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::combinatorics::{build_submanifold, ContingencyTable};
use crate::landscape::LandscapeSpec;
use crate::math::{ln, ln_factorial, ln_gamma};
use crate::volumes::ln_spherical_tube_bound;
use crate::{Error, Result};

/// Where the zero eigenvalue sits (or would be inserted) on one side.
fn zero_slot(values: &[f64]) -> (usize, bool) {
    match values.iter().position(|&v| v <= 0.0) {
        Some(i) if values[i] == 0.0 => (i, true),
        Some(i) => (i, false),
        None => (values.len(), false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroBlocks {
    /// Row of the ρ zero block in the embedded table.
    pub row: usize,
    /// Column of the O zero block.
    pub col: usize,
}

/// Zero-block positions of an embedded pair, if both exist.
pub fn zero_blocks(spec: &LandscapeSpec) -> Option<ZeroBlocks> {
    let (row, r) = zero_slot(spec.rho_values());
    let (col, c) = zero_slot(spec.obs_values());
    (r && c).then_some(ZeroBlocks { row, col })
}

/// Appends `z` zero eigenvalues to both ρ and O and pairs the new indices
/// with each other. A zero value absent from the base is created.
pub fn embed(
    base: &LandscapeSpec,
    table: &ContingencyTable,
    z: usize,
) -> Result<(LandscapeSpec, ContingencyTable)> {
    table.validate(base)?;
    if z == 0 {
        return Ok((base.clone(), table.clone()));
    }
    let grow = |values: &[f64], mults: &[usize]| {
        let (pos, present) = zero_slot(values);
        let (mut v, mut m) = (values.to_vec(), mults.to_vec());
        if present {
            m[pos] += z;
        } else {
            v.insert(pos, 0.0);
            m.insert(pos, z);
        }
        (v, m, pos, present)
    };
    let (rv, rm, row, rp) = grow(base.rho_values(), base.rho_mults());
    let (ov, om, col, cp) = grow(base.obs_values(), base.obs_mults());
    let spec = LandscapeSpec::new(rv, rm, ov, om)?;
    let mut rows = table.to_rows();
    if !rp {
        rows.insert(row, alloc::vec![0; table.cols()]);
    }
    if !cp {
        for r in rows.iter_mut() {
            r.insert(col, 0);
        }
    }
    rows[row][col] += z;
    Ok((spec, ContingencyTable::from_rows(&rows)?))
}

/// Zero-block sizes `(n_r, m_s, k_sr)`: ρ zero multiplicity, O zero
/// multiplicity and their overlap.
fn zero_sizes(spec: &LandscapeSpec, table: &ContingencyTable) -> Option<(usize, usize, usize)> {
    let zb = zero_blocks(spec)?;
    Some((
        spec.rho_mults()[zb.row],
        spec.obs_mults()[zb.col],
        table.get(zb.row, zb.col),
    ))
}

/// `ζ = N − m_s − n_r + k_sr`, evaluated after embedding `z = N₀` zeros.
///
/// Once both zero blocks exist the expression no longer depends on `z`:
/// each step adds one to all four terms.
pub fn zeta(base: &LandscapeSpec, table: &ContingencyTable) -> Result<usize> {
    let n0 = base.dim();
    let (spec, t) = embed(base, table, n0)?;
    let (nr, ms, k) = zero_sizes(&spec, &t).ok_or(Error::EmptyDimension)?;
    Ok(spec.dim() + k - ms - nr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRecord {
    pub z: usize,
    pub n: usize,
    pub codim: usize,
    pub beta_min: f64,
    /// `ln D^z(ε)`
    pub ln_d: f64,
    /// `ln F^z` from the closed-form ratio.
    pub ln_f: Option<f64>,
    /// `ln D^{z+1} − ln D^z` from independent bound evaluations.
    pub ln_f_direct: f64,
    /// `ln G^z = ln F^z − ln F^{z−1}`.
    pub ln_g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSequence {
    pub zeta: usize,
    pub eps: f64,
    pub records: Vec<BoundRecord>,
    /// Smallest `z` from which `D^z` decreases strictly through the end of the range.
    pub decreasing_from: Option<usize>,
}

impl BoundSequence {
    /// Least-squares slope of `ln G^z` against `ln z` over `window`.
    pub fn g_slope(&self, window: RangeInclusive<usize>) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| window.contains(&r.z) && r.z > 0)
            .filter_map(|r| r.ln_g.map(|g| (ln(r.z as f64), g)))
            .collect();
        (pts.len() >= 2).then(|| least_squares_slope(&pts))
    }

    /// `ln F^z` tends to this as `z → ∞`:
    /// `ζ·ln(ε²/(2β²ζ))`; `None` for `ζ = 0`.
    pub fn ln_f_limit(&self) -> Option<f64> {
        let last = self.records.last()?;
        (self.zeta > 0).then(|| {
            let z = self.zeta as f64;
            z * ln(self.eps * self.eps / (2.0 * last.beta_min * last.beta_min * z))
        })
    }
}

/// Closed form of `ln(D^{z+1}/D^z)` for a spec whose zero blocks exist.
fn ln_f_closed(
    spec: &LandscapeSpec,
    table: &ContingencyTable,
    codim: usize,
    zeta: usize,
    beta: f64,
    eps: f64,
) -> Option<f64> {
    let (nr, ms, k) = zero_sizes(spec, table)?;
    let (z, c) = (zeta as f64, codim as f64 / 2.0);
    Some(
        2.0 * z * ln(eps) - z * core::f64::consts::LN_2 - 2.0 * z * ln(beta) + ln_gamma(c + 1.0)
            - ln_gamma(c + z + 1.0)
            + ln_factorial(spec.dim())
            + ln_factorial(k)
            - ln_factorial(nr)
            - ln_factorial(ms),
    )
}

/// `D^z(ε)`, the spherical tube bound of the embedded submanifold, over
/// `z_range` (which must start at `N₀` or later).
pub fn bound_sequence(
    base: &LandscapeSpec,
    table: &ContingencyTable,
    eps: f64,
    z_range: RangeInclusive<usize>,
) -> Result<BoundSequence> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let n0 = base.dim();
    if *z_range.start() < n0 {
        return Err(Error::EmbeddingRange { base: n0 });
    }
    let zeta = zeta(base, table)?;
    let (z0, z1) = (*z_range.start(), *z_range.end());
    // one extra step so F^z is defined at the end of the range
    let mut raw = Vec::with_capacity(z1 - z0 + 2);
    for z in z0..=z1 + 1 {
        let (spec, t) = embed(base, table, z)?;
        let sub = build_submanifold(&spec, &t)?;
        let ln_d = ln_spherical_tube_bound(&spec, &sub, eps)?;
        raw.push((z, spec, t, sub, ln_d));
    }
    let mut records: Vec<BoundRecord> = Vec::with_capacity(raw.len() - 1);
    for w in raw.windows(2) {
        let (z, spec, t, sub, ln_d) = &w[0];
        let beta = sub.spectrum.beta_min.ok_or(Error::ZeroCodimension)?;
        let next_beta = w[1].3.spectrum.beta_min.ok_or(Error::ZeroCodimension)?;
        let ln_f = (beta == next_beta)
            .then(|| ln_f_closed(spec, t, sub.codim, zeta, beta, eps))
            .flatten();
        let ln_g = match (ln_f, records.last().and_then(|r| r.ln_f)) {
            (Some(f), Some(prev)) => Some(f - prev),
            _ => None,
        };
        records.push(BoundRecord {
            z: *z,
            n: spec.dim(),
            codim: sub.codim,
            beta_min: beta,
            ln_d: *ln_d,
            ln_f,
            ln_f_direct: w[1].4 - ln_d,
            ln_g,
        });
    }
    let mut decreasing_from = Some(z1);
    for w in records.windows(2).rev() {
        if w[1].ln_d < w[0].ln_d {
            decreasing_from = Some(w[0].z);
        } else {
            break;
        }
    }
    if records.len() < 2 {
        decreasing_from = None;
    }
    Ok(BoundSequence {
        zeta,
        eps,
        records,
        decreasing_from,
    })
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
