//! Critical submanifolds indexed by contingency tables.
//!
//! Row `i` of a table is the i-th ρ eigenvalue block, column `j` the j-th O
//! block, and `k_ij` counts how many indices of ρ-block `i` are paired with
//! O-block `j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::landscape::{hessian_spectrum, HessianSpectrum, LandscapeSpec, PairingPermutation};
use crate::{Error, Result};

/// Default cap on the number of tables materialized by [`enumerate_tables`].
pub const DEFAULT_MAX_TABLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    entries: Vec<usize>,
}

impl ContingencyTable {
    /// Row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<usize>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidTable(format!(
                "{} entries for a {rows}x{cols} table",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidTable("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        self.entries
            .chunks(self.cols)
            .map(<[usize]>::to_vec)
            .collect()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.entries
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn validate(&self, spec: &LandscapeSpec) -> Result<()> {
        if self.rows != spec.rho_mults().len() || self.cols != spec.obs_mults().len() {
            return Err(Error::InvalidTable(format!(
                "table is {}x{} but spec has {} rho blocks and {} obs blocks",
                self.rows,
                self.cols,
                spec.rho_mults().len(),
                spec.obs_mults().len()
            )));
        }
        if self.row_sums() != spec.rho_mults() {
            return Err(Error::InvalidTable(format!(
                "row sums {:?} differ from rho multiplicities {:?}",
                self.row_sums(),
                spec.rho_mults()
            )));
        }
        if self.col_sums() != spec.obs_mults() {
            return Err(Error::InvalidTable(format!(
                "column sums {:?} differ from obs multiplicities {:?}",
                self.col_sums(),
                spec.obs_mults()
            )));
        }
        Ok(())
    }

    pub fn sum_of_squares(&self) -> usize {
        self.entries.iter().map(|k| k * k).sum()
    }

    /// `Σ m_j² + Σ n_i² − Σ k_ij²`
    pub fn dimension(&self, spec: &LandscapeSpec) -> usize {
        let sq = |v: &[usize]| v.iter().map(|a| a * a).sum::<usize>();
        sq(spec.rho_mults()) + sq(spec.obs_mults()) - self.sum_of_squares()
    }

    /// `Σ k_ij λ̃_i σ̃_j`
    pub fn critical_value(&self, spec: &LandscapeSpec) -> f64 {
        let mut v = 0.0;
        for (i, l) in spec.rho_values().iter().enumerate() {
            for (j, s) in spec.obs_values().iter().enumerate() {
                v += self.get(i, j) as f64 * l * s;
            }
        }
        v
    }
}

/// Calls `f` on every nonnegative integer matrix with the given margins, in
/// descending lexicographic order of the row-major entries. Returns `false`
/// if `f` stopped the walk early.
pub fn visit_tables<F>(row_margins: &[usize], col_margins: &[usize], mut f: F) -> bool
where
    F: FnMut(&ContingencyTable) -> ControlFlow<()>,
{
    let (r, c) = (row_margins.len(), col_margins.len());
    if r == 0 || c == 0 || row_margins.iter().sum::<usize>() != col_margins.iter().sum::<usize>() {
        return true;
    }
    let mut table = ContingencyTable {
        rows: r,
        cols: c,
        entries: vec![0; r * c],
    };
    let mut colrem = col_margins.to_vec();
    fill(
        &mut table,
        row_margins,
        &mut colrem,
        0,
        0,
        row_margins[0],
        &mut f,
    )
    .is_continue()
}

fn fill<F>(
    t: &mut ContingencyTable,
    rows: &[usize],
    colrem: &mut [usize],
    i: usize,
    j: usize,
    rowrem: usize,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&ContingencyTable) -> ControlFlow<()>,
{
    let c = t.cols;
    if i + 1 == t.rows {
        // last row is forced by the column margins
        t.entries[i * c..].copy_from_slice(colrem);
        return f(t);
    }
    if j + 1 == c {
        if rowrem > colrem[j] {
            return ControlFlow::Continue(());
        }
        t.entries[i * c + j] = rowrem;
        colrem[j] -= rowrem;
        let res = fill(t, rows, colrem, i + 1, 0, rows[i + 1], f);
        colrem[j] += rowrem;
        return res;
    }
    let later: usize = colrem[j + 1..].iter().sum();
    let hi = rowrem.min(colrem[j]);
    let lo = rowrem.saturating_sub(later);
    for v in (lo..=hi).rev() {
        t.entries[i * c + j] = v;
        colrem[j] -= v;
        let res = fill(t, rows, colrem, i, j + 1, rowrem - v, f);
        colrem[j] += v;
        res?;
    }
    ControlFlow::Continue(())
}

/// Number of tables for the spec's margins, or an error once `limit` is exceeded.
pub fn count_tables(spec: &LandscapeSpec, limit: usize) -> Result<usize> {
    let mut n = 0usize;
    let done = visit_tables(spec.rho_mults(), spec.obs_mults(), |_| {
        n += 1;
        if n > limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if done {
        Ok(n)
    } else {
        Err(Error::TooManyTables { limit })
    }
}

/// All tables with margins (ρ multiplicities, O multiplicities).
pub fn enumerate_tables(spec: &LandscapeSpec, max_tables: usize) -> Result<Vec<ContingencyTable>> {
    let mut out = Vec::new();
    let done = visit_tables(spec.rho_mults(), spec.obs_mults(), |t| {
        if out.len() == max_tables {
            return ControlFlow::Break(());
        }
        out.push(t.clone());
        ControlFlow::Continue(())
    });
    if done {
        Ok(out)
    } else {
        Err(Error::TooManyTables { limit: max_tables })
    }
}

/// Pairing that walks the table in row-major order, matching the next `k_ij`
/// unused indices of ρ-block `i` with the next `k_ij` unused indices of
/// O-block `j`.
pub fn canonical_permutation(
    spec: &LandscapeSpec,
    table: &ContingencyTable,
) -> Result<PairingPermutation> {
    table.validate(spec)?;
    let mut next_rho = spec.rho_offsets();
    let mut next_obs = spec.obs_offsets();
    let mut map = vec![0usize; spec.dim()];
    for i in 0..table.rows {
        for j in 0..table.cols {
            for _ in 0..table.get(i, j) {
                map[next_rho[i]] = next_obs[j];
                next_rho[i] += 1;
                next_obs[j] += 1;
            }
        }
    }
    PairingPermutation::new(map)
}

/// Block overlap counts of an arbitrary pairing.
pub fn table_from_pairing(
    spec: &LandscapeSpec,
    pairing: &PairingPermutation,
) -> Result<ContingencyTable> {
    if pairing.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: pairing.len(),
        });
    }
    let (r, c) = (spec.rho_mults().len(), spec.obs_mults().len());
    let rb = spec.rho_block_of();
    let ob = spec.obs_block_of();
    let mut entries = vec![0usize; r * c];
    for (j, &p) in pairing.as_slice().iter().enumerate() {
        entries[rb[j] * c + ob[p]] += 1;
    }
    ContingencyTable::new(r, c, entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSubmanifold {
    pub table: ContingencyTable,
    pub pairing: PairingPermutation,
    pub value: f64,
    pub dim: usize,
    pub codim: usize,
    pub spectrum: HessianSpectrum,
}

pub fn build_submanifold(
    spec: &LandscapeSpec,
    table: &ContingencyTable,
) -> Result<CriticalSubmanifold> {
    let pairing = canonical_permutation(spec, table)?;
    let spectrum = hessian_spectrum(spec, &pairing)?;
    let n = spec.dim();
    let dim = table.dimension(spec);
    Ok(CriticalSubmanifold {
        table: table.clone(),
        value: table.critical_value(spec),
        dim,
        codim: n * n - dim,
        pairing,
        spectrum,
    })
}

/// Every critical submanifold, by descending critical value; ties keep the
/// enumeration order.
pub fn enumerate_submanifolds(
    spec: &LandscapeSpec,
    max_tables: usize,
) -> Result<Vec<CriticalSubmanifold>> {
    let mut subs = enumerate_tables(spec, max_tables)?
        .iter()
        .map(|t| build_submanifold(spec, t))
        .collect::<Result<Vec<_>>>()?;
    subs.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(subs)
}
