//! Seeded randomized checks: the geodesic lower-bound trials and Haar
//! estimates of near-critical volume fractions.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::combinatorics::{table_from_pairing, ContingencyTable};
use crate::landscape::{
    f_along_normal, grad_norm, hessian_spectrum, random_critical_point, LandscapeSpec, PairBeta,
    PairKind, PairingPermutation,
};
use crate::linalg::{haar_unitary, CMatrix};
use crate::math::{sin, sqrt};
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 200;
pub const DEFAULT_SLACK_TOL: f64 = 1e-9;
/// Smallest allowed gap between distinct random eigenvalues.
pub const MIN_EIGENVALUE_GAP: f64 = 1e-3;
/// Haar draws per substream in [`empirical_volfrac`].
pub const EMPIRICAL_CHUNK: u64 = 1 << 16;

/// ChaCha8 keyed by `seed`, on the independent substream `stream_id`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// How the unit normal direction of a trial is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    /// Gaussian coefficients on every nonzero-β eigendirection.
    Gaussian,
    /// One eigendirection with `|β| = β_min`; the bound is attained.
    SingleEigenvector,
    /// Random weights on eigendirections of pairwise disjoint index pairs.
    DisjointPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureTrialRecord {
    pub seed: u64,
    pub stream_id: u64,
    pub dim: usize,
    pub rho_mults: Vec<usize>,
    pub obs_mults: Vec<usize>,
    pub table: ContingencyTable,
    pub direction: DirectionMode,
    /// `(j, k, kind, weight)` of every component of the normal direction.
    pub coefficients: Vec<(usize, usize, PairKind, f64)>,
    pub beta_min: f64,
    pub grid_points: usize,
    /// `min_s [f(s) − β_min² sin²(√2 s)/2]`
    pub min_slack: f64,
    /// Grid point where the minimum slack occurs.
    pub argmin_s: f64,
    /// Largest deviation from the closed form, when the direction has one.
    pub analytic_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// `[0, π/(2√2)]` in `points` equal steps.
pub fn conjecture_grid(points: usize) -> Vec<f64> {
    let end = core::f64::consts::PI / (2.0 * core::f64::consts::SQRT_2);
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| end * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn sin_sq_half(beta: f64, alpha: f64, s: f64) -> f64 {
    let x = sin(core::f64::consts::SQRT_2 * alpha * s);
    beta * beta * x * x / 2.0
}

fn normalized_gaussian<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let c: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = sqrt(c.iter().map(|x| x * x).sum());
        if norm > 0.0 {
            return c.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn random_kind<R: Rng + ?Sized>(rng: &mut R) -> PairKind {
    if rng.random_bool(0.5) {
        PairKind::Real
    } else {
        PairKind::Imag
    }
}

/// `y += c · pair_generator(n, j, k, kind)` without forming the generator.
fn add_pair(y: &mut CMatrix, j: usize, k: usize, kind: PairKind, c: f64) {
    let h = c * core::f64::consts::FRAC_1_SQRT_2;
    match kind {
        PairKind::Real => {
            y[(j, k)].re += h;
            y[(k, j)].re -= h;
        }
        PairKind::Imag => {
            y[(j, k)].im += h;
            y[(k, j)].im += h;
        }
    }
}

/// One trial: a random point of the table's critical submanifold, a random
/// unit normal `A`, and the gradient profile along `U exp(sA)` against the
/// lower bound.
pub fn conjecture_trial(
    spec: &LandscapeSpec,
    table: &ContingencyTable,
    stream: &mut RandomStream,
    grid_points: usize,
    direction: DirectionMode,
    tolerance: f64,
) -> Result<ConjectureTrialRecord> {
    let n = spec.dim();
    let cp = random_critical_point(spec, table, stream)?;
    let spectrum = hessian_spectrum(spec, &cp.pairing)?;
    let beta_min = spectrum.beta_min.ok_or(Error::ZeroCodimension)?;
    let pairs = &spectrum.pairs;

    let mut coefficients: Vec<(usize, usize, PairKind, f64)> = Vec::new();
    let mut closed: Option<Vec<(f64, f64)>> = None;
    match direction {
        DirectionMode::Gaussian => {
            let c = normalized_gaussian(2 * pairs.len(), stream);
            for (i, p) in pairs.iter().enumerate() {
                coefficients.push((p.j, p.k, PairKind::Real, c[2 * i]));
                coefficients.push((p.j, p.k, PairKind::Imag, c[2 * i + 1]));
            }
        }
        DirectionMode::SingleEigenvector => {
            let minimal: Vec<&PairBeta> =
                pairs.iter().filter(|p| p.beta.abs() == beta_min).collect();
            let p = minimal[stream.random_range(0..minimal.len())];
            coefficients.push((p.j, p.k, random_kind(stream), 1.0));
            closed = Some(vec![(p.beta, 1.0)]);
        }
        DirectionMode::DisjointPairs => {
            let mut order: Vec<&PairBeta> = pairs.iter().collect();
            order.shuffle(stream);
            let mut used = vec![false; n];
            let mut chosen = Vec::new();
            for p in order {
                if !used[p.j] && !used[p.k] {
                    used[p.j] = true;
                    used[p.k] = true;
                    chosen.push(*p);
                }
            }
            let w = normalized_gaussian(chosen.len(), stream);
            let mut terms = Vec::new();
            for (p, a) in chosen.iter().zip(w) {
                coefficients.push((p.j, p.k, random_kind(stream), a));
                terms.push((p.beta, a));
            }
            closed = Some(terms);
        }
    }

    let mut at = CMatrix::zeros(n, n);
    for &(j, k, kind, c) in &coefficients {
        add_pair(&mut at, j, k, kind, c);
    }
    let a = cp.from_frame(&at);
    let grid = conjecture_grid(grid_points);
    let f = f_along_normal(spec, &cp.u, &a, &grid)?;

    let mut min_slack = f64::INFINITY;
    let mut argmin_s = 0.0;
    for (fv, &s) in f.iter().zip(&grid) {
        let slack = fv - sin_sq_half(beta_min, 1.0, s);
        if slack < min_slack {
            min_slack = slack;
            argmin_s = s;
        }
    }
    let analytic_error = closed.map(|terms| {
        f.iter()
            .zip(&grid)
            .map(|(fv, &s)| {
                let want: f64 = terms.iter().map(|&(b, a)| sin_sq_half(b, a, s)).sum();
                (fv - want).abs()
            })
            .fold(0.0, f64::max)
    });
    Ok(ConjectureTrialRecord {
        seed: stream.seed(),
        stream_id: stream.stream_id(),
        dim: n,
        rho_mults: spec.rho_mults().to_vec(),
        obs_mults: spec.obs_mults().to_vec(),
        table: table.clone(),
        direction,
        coefficients,
        beta_min,
        grid_points,
        min_slack,
        argmin_s,
        analytic_error,
        tolerance,
        pass: min_slack >= -tolerance,
    })
}

/// Uniform composition of `n` (each of the `n−1` gaps is a cut with
/// probability 1/2).
pub fn random_composition<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut parts = vec![1usize];
    for _ in 1..n {
        if rng.random_bool(0.5) {
            parts.push(1);
        } else {
            *parts.last_mut().unwrap() += 1;
        }
    }
    parts
}

/// `k` distinct values in [0, 1], descending, pairwise at least
/// [`MIN_EIGENVALUE_GAP`] apart. Candidates too close to an accepted value
/// are redrawn.
pub fn random_distinct_values<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut vals: Vec<f64> = Vec::with_capacity(k);
    while vals.len() < k {
        let x: f64 = rng.random();
        if vals.iter().all(|v| (v - x).abs() >= MIN_EIGENVALUE_GAP) {
            vals.push(x);
        }
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

pub fn random_spec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<LandscapeSpec> {
    let rm = random_composition(n, rng);
    let rv = random_distinct_values(rm.len(), rng);
    let om = random_composition(n, rng);
    let ov = random_distinct_values(om.len(), rng);
    LandscapeSpec::new(rv, rm, ov, om)
}

/// Table of a uniformly random pairing.
pub fn random_table<R: Rng + ?Sized>(
    spec: &LandscapeSpec,
    rng: &mut R,
) -> Result<ContingencyTable> {
    let mut map: Vec<usize> = (0..spec.dim()).collect();
    map.shuffle(rng);
    table_from_pairing(spec, &PairingPermutation::new(map)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub dims: Vec<usize>,
    pub trials_per_dim: u64,
    pub seed: u64,
    pub grid_points: usize,
    pub direction: DirectionMode,
    pub tolerance: f64,
}

impl CampaignConfig {
    pub fn total_trials(&self) -> u64 {
        self.dims.len() as u64 * self.trials_per_dim
    }
}

/// Trial `index` of a campaign: its own substream draws the degeneracy
/// structure, eigenvalues, table, critical point and direction.
pub fn campaign_trial(cfg: &CampaignConfig, index: u64) -> Result<ConjectureTrialRecord> {
    if cfg.trials_per_dim == 0 || cfg.dims.is_empty() {
        return Err(Error::ZeroTrials);
    }
    let n = cfg.dims[(index / cfg.trials_per_dim) as usize % cfg.dims.len()];
    if n < 2 {
        return Err(Error::InvalidArgument(
            "campaign dimensions must be at least 2".into(),
        ));
    }
    let mut stream = RandomStream::new(cfg.seed, index);
    loop {
        let spec = random_spec(n, &mut stream)?;
        let table = random_table(&spec, &mut stream)?;
        let pairing = crate::combinatorics::canonical_permutation(&spec, &table)?;
        if hessian_spectrum(&spec, &pairing)?.pairs.is_empty() {
            continue;
        }
        return conjecture_trial(
            &spec,
            &table,
            &mut stream,
            cfg.grid_points,
            cfg.direction,
            cfg.tolerance,
        );
    }
}

/// Order-insensitive aggregate of trial records.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub trials: u64,
    pub failures: u64,
    pub min_slack: f64,
    /// Trial index of the smallest slack (lowest index on ties).
    pub min_slack_trial: Option<u64>,
    pub max_analytic_error: Option<f64>,
    /// Failing trials, sorted by trial index.
    pub failed: Vec<(u64, ConjectureTrialRecord)>,
}

impl Default for CampaignSummary {
    fn default() -> Self {
        Self {
            trials: 0,
            failures: 0,
            min_slack: f64::INFINITY,
            min_slack_trial: None,
            max_analytic_error: None,
            failed: Vec::new(),
        }
    }
}

impl CampaignSummary {
    pub fn add(&mut self, index: u64, rec: &ConjectureTrialRecord) {
        self.trials += 1;
        let better = rec.min_slack < self.min_slack
            || (rec.min_slack == self.min_slack && self.min_slack_trial.is_some_and(|t| index < t));
        if better {
            self.min_slack = rec.min_slack;
            self.min_slack_trial = Some(index);
        }
        if let Some(e) = rec.analytic_error {
            self.max_analytic_error = Some(self.max_analytic_error.map_or(e, |m| m.max(e)));
        }
        if !rec.pass {
            self.failures += 1;
            let pos = self.failed.partition_point(|(i, _)| *i < index);
            self.failed.insert(pos, (index, rec.clone()));
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.failures += other.failures;
        if other.min_slack < self.min_slack
            || (other.min_slack == self.min_slack
                && other.min_slack_trial < self.min_slack_trial
                && other.min_slack_trial.is_some())
        {
            self.min_slack = other.min_slack;
            self.min_slack_trial = other.min_slack_trial;
        }
        self.max_analytic_error = match (self.max_analytic_error, other.max_analytic_error) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.failed.extend(other.failed);
        self.failed.sort_by_key(|(i, _)| *i);
        self
    }
}

/// Sequential campaign over trial indices `0..total`.
pub fn conjecture_campaign(cfg: &CampaignConfig) -> Result<CampaignSummary> {
    if cfg.total_trials() == 0 {
        return Err(Error::ZeroTrials);
    }
    let mut summary = CampaignSummary::default();
    for i in 0..cfg.total_trials() {
        summary.add(i, &campaign_trial(cfg, i)?);
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    pub eps: f64,
    pub trials: u64,
    pub hits: u64,
    pub fraction: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EmpiricalEstimate {
    pub fn from_counts(eps: f64, trials: u64, hits: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::ZeroTrials);
        }
        let (lo, hi) = wilson_interval(hits, trials, 1.959_963_984_540_054);
        Ok(Self {
            eps,
            trials,
            hits,
            fraction: hits as f64 / trials as f64,
            ci_low: lo,
            ci_high: hi,
        })
    }

    /// Binomial standard error of the fraction.
    pub fn std_error(&self) -> f64 {
        sqrt(self.fraction * (1.0 - self.fraction) / self.trials as f64)
    }
}

pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    let lo = if hits == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if hits == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Hits among `count` Haar draws from substream `(seed, chunk)`, one count
/// per threshold in `eps`.
pub fn empirical_hits(
    spec: &LandscapeSpec,
    eps: &[f64],
    seed: u64,
    chunk: u64,
    count: u64,
) -> Result<Vec<u64>> {
    let mut stream = RandomStream::new(seed, chunk);
    let mut hits = vec![0; eps.len()];
    for _ in 0..count {
        let u = haar_unitary(spec.dim(), &mut stream)?;
        let g = grad_norm(spec, &u)?;
        for (h, &e) in hits.iter_mut().zip(eps) {
            if g <= e {
                *h += 1;
            }
        }
    }
    Ok(hits)
}

/// Chunk sizes for `trials` draws; chunk `c` uses substream `c`.
pub fn empirical_chunks(trials: u64) -> impl Iterator<Item = (u64, u64)> {
    let full = trials / EMPIRICAL_CHUNK;
    let rest = trials % EMPIRICAL_CHUNK;
    (0..full)
        .map(|c| (c, EMPIRICAL_CHUNK))
        .chain((rest > 0).then_some((full, rest)))
}

/// Fraction of Haar-random `U` with `‖grad J(U)‖ ≤ ε`.
pub fn empirical_volfrac(
    spec: &LandscapeSpec,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalEstimate> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let mut hits = 0;
    for (c, count) in empirical_chunks(trials) {
        hits += empirical_hits(spec, &[eps], seed, c, count)?[0];
    }
    EmpiricalEstimate::from_counts(eps, trials, hits)
}
