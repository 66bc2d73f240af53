//! Command-line front end. [`run`] is the whole program minus process exit,
//! so tests can drive it in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use critgeom_core::asymptotics::{bound_sequence, zeta};
use critgeom_core::combinatorics::{
    enumerate_submanifolds, CriticalSubmanifold, DEFAULT_MAX_TABLES,
};
use critgeom_core::curvature::{
    mean_curvature_norm, random_unit_normal, shape_operator, tangent_basis,
};
use critgeom_core::landscape::{random_critical_point, LandscapeSpec};
use critgeom_core::montecarlo::{
    campaign_trial, empirical_chunks, empirical_hits, CampaignConfig, CampaignSummary,
    ConjectureTrialRecord, DirectionMode, EmpiricalEstimate, RandomStream, DEFAULT_GRID_POINTS,
    DEFAULT_SLACK_TOL,
};
use critgeom_core::volumes::{ln_spherical_tube_bound, vol_orbit, volfrac_estimate};
use critgeom_core::Error as CoreError;

use crate::output::{linear, log10_of_ln, Emitter, Format, Header};
use crate::specfile::{read_spec, spec_hash};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "critgeom",
    version,
    about = "Critical-set geometry of the landscape J(U) = Tr(UρU†O)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Landscape spec file, YAML or JSON
    #[arg(long, global = true, env = "CRITGEOM_SPEC")]
    pub spec: Option<PathBuf>,
    /// Full eigenvalue list of ρ (use with --obs)
    #[arg(
        long,
        global = true,
        env = "CRITGEOM_RHO",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub rho: Vec<f64>,
    /// Full eigenvalue list of O (use with --rho)
    #[arg(
        long,
        global = true,
        env = "CRITGEOM_OBS",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub obs: Vec<f64>,
    /// Rank-one projectors ρ and O in this dimension
    #[arg(long, global = true, env = "CRITGEOM_RANK_ONE")]
    pub rank_one: Option<usize>,
    /// Gradient-norm thresholds
    #[arg(long, global = true, env = "CRITGEOM_EPS", value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Trial count (per dimension for `conjecture`, per table for `curvature`)
    #[arg(long, global = true, env = "CRITGEOM_TRIALS")]
    pub trials: Option<u64>,
    #[arg(long, global = true, env = "CRITGEOM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, env = "CRITGEOM_GRID_POINTS", default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Last embedding index for `asymptotics`
    #[arg(long, global = true, env = "CRITGEOM_ZMAX", default_value_t = 200)]
    pub zmax: usize,
    #[arg(
        long,
        global = true,
        env = "CRITGEOM_FORMAT",
        value_enum,
        default_value = "json"
    )]
    pub format: Format,
    /// Abort enumeration beyond this many contingency tables
    #[arg(long, global = true, env = "CRITGEOM_MAX_TABLES", default_value_t = DEFAULT_MAX_TABLES)]
    pub max_tables: usize,
    /// Worker cap; 0 uses every core
    #[arg(long, global = true, env = "CRITGEOM_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Smaller default workloads
    #[arg(long, global = true, env = "CRITGEOM_QUICK")]
    pub quick: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Gaussian,
    Single,
    Disjoint,
}

impl From<Direction> for DirectionMode {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Gaussian => DirectionMode::Gaussian,
            Direction::Single => DirectionMode::SingleEigenvector,
            Direction::Disjoint => DirectionMode::DisjointPairs,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One record per critical submanifold
    Enumerate,
    /// Tube volume-fraction estimates and spherical bounds per submanifold
    Volfrac,
    /// Hessian spectra per submanifold
    Spectrum,
    /// Random trials of the geodesic lower bound on random landscapes
    Conjecture {
        #[arg(
            long,
            env = "CRITGEOM_DIMS",
            value_delimiter = ',',
            default_value = "4,6,8,12"
        )]
        dims: Vec<usize>,
        #[arg(
            long,
            env = "CRITGEOM_DIRECTION",
            value_enum,
            default_value = "gaussian"
        )]
        direction: Direction,
        /// A trial fails when its minimum slack is below −tolerance
        #[arg(long, env = "CRITGEOM_TOLERANCE", default_value_t = DEFAULT_SLACK_TOL, allow_hyphen_values = true)]
        tolerance: f64,
        /// Emit every trial, not only failures
        #[arg(long, env = "CRITGEOM_ALL_RECORDS")]
        all_records: bool,
    },
    /// Haar Monte Carlo estimate of the near-critical fraction
    Empirical,
    /// Bound sequence D^z of one submanifold under zero embedding
    Asymptotics {
        /// Submanifold index in `enumerate` order
        #[arg(long, env = "CRITGEOM_TABLE", default_value_t = 0)]
        table: usize,
    },
    /// Shape operators at random points and normals
    Curvature {
        /// Only this submanifold (index in `enumerate` order)
        #[arg(long, env = "CRITGEOM_TABLE")]
        table: Option<usize>,
    },
    /// Internal consistency suite
    Verify,
}

/// Exit code for an error chain: 3 for numerical breakdown, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<CoreError>(),
            Some(CoreError::NonConvergence)
        )
    });
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                let _ = write!(err, "{e}");
                EXIT_INPUT
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.opts.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    // output is buffered so the work can run inside the pool
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(&cli, &mut buf));
    if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    let o = &cli.opts;
    match &cli.command {
        Command::Enumerate => cmd_enumerate(o, out),
        Command::Volfrac => cmd_volfrac(o, out),
        Command::Spectrum => cmd_spectrum(o, out),
        Command::Conjecture {
            dims,
            direction,
            tolerance,
            all_records,
        } => cmd_conjecture(o, dims, (*direction).into(), *tolerance, *all_records, out),
        Command::Empirical => cmd_empirical(o, out),
        Command::Asymptotics { table } => cmd_asymptotics(o, *table, out),
        Command::Curvature { table } => cmd_curvature(o, *table, out),
        Command::Verify => cmd_verify(o, out),
    }
}

pub fn load_spec(o: &Options) -> anyhow::Result<LandscapeSpec> {
    let inline = !o.rho.is_empty() || !o.obs.is_empty();
    let given = [o.spec.is_some(), inline, o.rank_one.is_some()];
    match given.iter().filter(|g| **g).count() {
        0 => bail!("no landscape given: use --spec, --rho with --obs, or --rank-one"),
        1 => {}
        _ => bail!("give only one of --spec, --rho/--obs, --rank-one"),
    }
    if let Some(p) = &o.spec {
        return read_spec(p);
    }
    if let Some(n) = o.rank_one {
        return Ok(LandscapeSpec::rank_one(n)?);
    }
    Ok(LandscapeSpec::from_eigenvalues(&o.rho, &o.obs)?)
}

fn eps_list(o: &Options, default: f64) -> anyhow::Result<Vec<f64>> {
    let eps = if o.eps.is_empty() {
        vec![default]
    } else {
        o.eps.clone()
    };
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        bail!("--eps values must be positive and finite, got {e}");
    }
    Ok(eps)
}

fn submanifolds(spec: &LandscapeSpec, o: &Options) -> anyhow::Result<Vec<CriticalSubmanifold>> {
    enumerate_submanifolds(spec, o.max_tables).map_err(|e| match e {
        CoreError::TooManyTables { limit } => {
            anyhow!("more than {limit} contingency tables; raise --max-tables to enumerate them")
        }
        other => other.into(),
    })
}

fn fields(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("record literals are objects"),
    }
}

fn spec_header(command: &'static str, spec: &LandscapeSpec, seed: Option<u64>) -> Header {
    Header {
        command,
        spec_hash: Some(spec_hash(spec)),
        seed,
    }
}

fn cmd_enumerate(o: &Options, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = load_spec(o)?;
    let subs = submanifolds(&spec, o)?;
    let mut e = Emitter::new(out, o.format, spec_header("enumerate", &spec, None));
    for (i, s) in subs.iter().enumerate() {
        let vol = vol_orbit(&spec, s);
        e.emit(
            "submanifold",
            fields(json!({
                "index": i,
                "value": s.value,
                "dim": s.dim,
                "codim": s.codim,
                "beta_min": s.spectrum.beta_min,
                "log10_volume": vol.log10(),
                "volume": linear(vol.ln()),
                "two_pi_half_power": vol.two_pi_numerator(),
                "table": s.table.to_rows(),
                "pairing": s.pairing.as_slice(),
            })),
        )?;
    }
    e.emit(
        "summary",
        fields(json!({"dim": spec.dim(), "tables": subs.len()})),
    )?;
    e.finish()?;
    Ok(EXIT_OK)
}

fn cmd_volfrac(o: &Options, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = load_spec(o)?;
    let eps = eps_list(o, 0.1)?;
    let subs = submanifolds(&spec, o)?;
    let mut e = Emitter::new(out, o.format, spec_header("volfrac", &spec, None));
    let mut totals = vec![(0.0, 0.0); eps.len()];
    for (i, s) in subs.iter().enumerate() {
        let est = volfrac_estimate(&spec, s).ok();
        for (k, &x) in eps.iter().enumerate() {
            let rec = match est {
                Some(est) => {
                    let ln_est = est.ln_evaluate(x);
                    let ln_bound = ln_spherical_tube_bound(&spec, s, x)?;
                    totals[k].0 += ln_est.exp();
                    totals[k].1 += ln_bound.exp();
                    json!({
                        "index": i,
                        "value": s.value,
                        "codim": s.codim,
                        "eps": x,
                        "power": est.power,
                        "log10_coefficient": est.coefficient.log10(),
                        "coefficient": linear(est.coefficient.ln()),
                        "log10_estimate": log10_of_ln(ln_est),
                        "estimate": linear(ln_est),
                        "log10_bound": log10_of_ln(ln_bound),
                        "bound": linear(ln_bound),
                        "flag": null,
                    })
                }
                None => json!({
                    "index": i,
                    "value": s.value,
                    "codim": s.codim,
                    "eps": x,
                    "power": 0,
                    "log10_coefficient": null,
                    "coefficient": null,
                    "log10_estimate": null,
                    "estimate": null,
                    "log10_bound": null,
                    "bound": null,
                    "flag": "codim0",
                }),
            };
            e.emit("submanifold", fields(rec))?;
        }
    }
    for (x, (est, bound)) in eps.iter().zip(totals) {
        e.emit(
            "summary",
            fields(json!({"eps": x, "total_estimate": est, "total_bound": bound, "tables": subs.len()})),
        )?;
    }
    e.finish()?;
    Ok(EXIT_OK)
}

fn cmd_spectrum(o: &Options, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = load_spec(o)?;
    let subs = submanifolds(&spec, o)?;
    let mut e = Emitter::new(out, o.format, spec_header("spectrum", &spec, None));
    for (i, s) in subs.iter().enumerate() {
        let betas: Vec<Value> = s
            .spectrum
            .entries
            .iter()
            .map(|(b, m)| json!([b, m]))
            .collect();
        e.emit(
            "submanifold",
            fields(json!({
                "index": i,
                "value": s.value,
                "dim": s.dim,
                "codim": s.codim,
                "beta_min": s.spectrum.beta_min,
                "zero_multiplicity": s.spectrum.zero_multiplicity,
                "beta": betas,
                "table": s.table.to_rows(),
            })),
        )?;
    }
    e.emit(
        "summary",
        fields(json!({"dim": spec.dim(), "tables": subs.len()})),
    )?;
    e.finish()?;
    Ok(EXIT_OK)
}

fn direction_name(d: DirectionMode) -> &'static str {
    match d {
        DirectionMode::Gaussian => "gaussian",
        DirectionMode::SingleEigenvector => "single",
        DirectionMode::DisjointPairs => "disjoint",
    }
}

fn trial_fields(i: u64, r: &ConjectureTrialRecord, full: bool) -> Map<String, Value> {
    let mut m = fields(json!({
        "trial": i,
        "stream_id": r.stream_id,
        "dim": r.dim,
        "beta_min": r.beta_min,
        "min_slack": r.min_slack,
        "argmin_s": r.argmin_s,
        "analytic_error": r.analytic_error,
        "pass": r.pass,
    }));
    if full {
        let coef: Vec<Value> = r
            .coefficients
            .iter()
            .map(|(j, k, kind, c)| json!([j, k, format!("{kind:?}").to_lowercase(), c]))
            .collect();
        m.extend(fields(json!({
            "rho_multiplicities": r.rho_mults,
            "obs_multiplicities": r.obs_mults,
            "table": r.table.to_rows(),
            "coefficients": coef,
        })));
    }
    m
}

/// Runs trials in parallel; the summary does not depend on the schedule.
pub fn run_campaign(cfg: &CampaignConfig) -> anyhow::Result<Vec<(u64, ConjectureTrialRecord)>> {
    let recs: Result<Vec<_>, _> = (0..cfg.total_trials())
        .into_par_iter()
        .map(|i| campaign_trial(cfg, i).map(|r| (i, r)))
        .collect();
    Ok(recs?)
}

pub fn summarize(recs: &[(u64, ConjectureTrialRecord)]) -> CampaignSummary {
    let mut s = CampaignSummary::default();
    for (i, r) in recs {
        s.add(*i, r);
    }
    s
}

fn cmd_conjecture(
    o: &Options,
    dims: &[usize],
    direction: DirectionMode,
    tolerance: f64,
    all_records: bool,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    if let Some(d) = dims.iter().find(|d| **d < 2) {
        bail!("--dims entries must be at least 2, got {d}");
    }
    let cfg = CampaignConfig {
        dims: dims.to_vec(),
        trials_per_dim: o.trials.unwrap_or(if o.quick { 100 } else { 1000 }),
        seed: o.seed,
        grid_points: o.grid_points,
        direction,
        tolerance,
    };
    if cfg.total_trials() == 0 || o.grid_points == 0 {
        bail!("need at least one trial and one grid point");
    }
    let recs = run_campaign(&cfg)?;
    let summary = summarize(&recs);
    let header = Header {
        command: "conjecture",
        spec_hash: None,
        seed: Some(o.seed),
    };
    let mut e = Emitter::new(out, o.format, header);
    if all_records {
        for (i, r) in &recs {
            e.emit("trial", trial_fields(*i, r, !r.pass))?;
        }
    } else {
        for (i, r) in &summary.failed {
            e.emit("trial", trial_fields(*i, r, true))?;
        }
    }
    e.emit(
        "summary",
        fields(json!({
            "dims": dims,
            "trials_per_dim": cfg.trials_per_dim,
            "direction": direction_name(direction),
            "grid_points": cfg.grid_points,
            "tolerance": tolerance,
            "trials": summary.trials,
            "failures": summary.failures,
            "min_slack": summary.min_slack,
            "min_slack_trial": summary.min_slack_trial,
            "max_analytic_error": summary.max_analytic_error,
        })),
    )?;
    e.finish()?;
    Ok(if summary.failures > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

/// Hit counts per threshold, summed over parallel chunks.
pub fn empirical_counts(
    spec: &LandscapeSpec,
    eps: &[f64],
    trials: u64,
    seed: u64,
) -> anyhow::Result<Vec<u64>> {
    let chunks: Vec<(u64, u64)> = empirical_chunks(trials).collect();
    let per: Result<Vec<Vec<u64>>, _> = chunks
        .par_iter()
        .map(|&(c, n)| empirical_hits(spec, eps, seed, c, n))
        .collect();
    let mut total = vec![0; eps.len()];
    for h in per? {
        for (t, x) in total.iter_mut().zip(h) {
            *t += x;
        }
    }
    Ok(total)
}

fn cmd_empirical(o: &Options, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = load_spec(o)?;
    let eps = eps_list(o, 0.2)?;
    let trials = o.trials.unwrap_or(if o.quick { 10_000 } else { 100_000 });
    if trials == 0 {
        return Err(CoreError::ZeroTrials.into());
    }
    // the tube estimate is reported alongside when the tables fit the guard
    let subs = match enumerate_submanifolds(&spec, o.max_tables) {
        Ok(s) => Some(s),
        Err(CoreError::TooManyTables { .. }) => None,
        Err(other) => return Err(other.into()),
    };
    let hits = empirical_counts(&spec, &eps, trials, o.seed)?;
    let mut e = Emitter::new(out, o.format, spec_header("empirical", &spec, Some(o.seed)));
    for (&x, h) in eps.iter().zip(hits) {
        let est = EmpiricalEstimate::from_counts(x, trials, h)?;
        let tube: Option<f64> = subs.as_ref().map(|subs| {
            subs.iter()
                .filter_map(|s| volfrac_estimate(&spec, s).ok())
                .map(|v| v.evaluate(x))
                .sum()
        });
        let ratio = tube.filter(|_| est.hits > 0).map(|t| est.fraction / t);
        e.emit(
            "estimate",
            fields(json!({
                "eps": x,
                "trials": trials,
                "hits": est.hits,
                "fraction": est.fraction,
                "std_error": est.std_error(),
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
                "tube_estimate": tube,
                "ratio_to_tube": ratio,
            })),
        )?;
    }
    e.finish()?;
    Ok(EXIT_OK)
}

fn cmd_asymptotics(o: &Options, table: usize, out: &mut dyn Write) -> anyhow::Result<i32> {
    let base = load_spec(o)?;
    let eps = eps_list(o, 0.5)?;
    let subs = submanifolds(&base, o)?;
    let sub = subs.get(table).with_context(|| {
        format!(
            "--table {table} is out of range ({} submanifolds)",
            subs.len()
        )
    })?;
    let n0 = base.dim();
    if o.zmax < n0 {
        bail!("--zmax must be at least the base dimension {n0}");
    }
    let z_eta = zeta(&base, &sub.table)?;
    let mut e = Emitter::new(out, o.format, spec_header("asymptotics", &base, None));
    for &x in &eps {
        let seq = bound_sequence(&base, &sub.table, x, n0..=o.zmax)?;
        for r in &seq.records {
            e.emit(
                "z",
                fields(json!({
                    "eps": x,
                    "z": r.z,
                    "n": r.n,
                    "codim": r.codim,
                    "beta_min": r.beta_min,
                    "ln_d": r.ln_d,
                    "log10_d": log10_of_ln(r.ln_d),
                    "ln_f": r.ln_f,
                    "ln_f_direct": r.ln_f_direct,
                    "ln_g": r.ln_g,
                })),
            )?;
        }
        let lo = 50.max(n0 + 1);
        let window = if o.zmax >= lo + 1 {
            lo..=o.zmax
        } else {
            n0..=o.zmax
        };
        e.emit(
            "summary",
            fields(json!({
                "eps": x,
                "table": sub.table.to_rows(),
                "value": sub.value,
                "zeta": z_eta,
                "decreasing_from": seq.decreasing_from,
                "g_slope_window": [window.start(), window.end()],
                "g_slope": seq.g_slope(window.clone()),
                "ln_f_limit": seq.ln_f_limit(),
                "note": if z_eta == 0 { Some("zeta = 0: F^z does not tend to 0") } else { None },
            })),
        )?;
    }
    e.finish()?;
    Ok(EXIT_OK)
}

fn cmd_curvature(o: &Options, table: Option<usize>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = load_spec(o)?;
    let subs = submanifolds(&spec, o)?;
    let chosen: Vec<usize> = match table {
        Some(t) if t < subs.len() => vec![t],
        Some(t) => bail!("--table {t} is out of range ({} submanifolds)", subs.len()),
        None => (0..subs.len()).collect(),
    };
    let draws = o.trials.unwrap_or(if o.quick { 2 } else { 5 });
    let jobs: Vec<(usize, u64)> = chosen
        .iter()
        .flat_map(|&i| (0..draws).map(move |d| (i, d)))
        .collect();
    let recs: Result<Vec<Option<Map<String, Value>>>, CoreError> = jobs
        .par_iter()
        .map(|&(i, d)| {
            let sub = &subs[i];
            if sub.codim == 0 {
                return Ok(None);
            }
            let mut stream = RandomStream::new(o.seed, i as u64 * draws + d);
            let cp = random_critical_point(&spec, &sub.table, &mut stream)?;
            let basis = tangent_basis(&spec, sub, &cp.u)?;
            let z = random_unit_normal(&basis, &mut stream)?;
            let a = shape_operator(&spec, &basis, &z)?;
            Ok(Some(fields(json!({
                "index": i,
                "draw": d,
                "stream_id": stream.stream_id(),
                "category_sizes": a.sizes,
                "normal_dim": basis.normal.len(),
                "trace": a.trace(),
                "symmetry_residual": a.symmetry_residual(),
                "block_residual": a.block_residual(),
                "pairing_residual": a.pairing_residual(),
                "mean_curvature_norm": mean_curvature_norm(&basis),
                "principal_curvatures": a.principal_curvatures(),
            }))))
        })
        .collect();
    let mut e = Emitter::new(out, o.format, spec_header("curvature", &spec, Some(o.seed)));
    for r in recs?.into_iter().flatten() {
        e.emit("draw", r)?;
    }
    let skipped: Vec<usize> = chosen
        .iter()
        .copied()
        .filter(|&i| subs[i].codim == 0)
        .collect();
    e.emit(
        "summary",
        fields(json!({"tables": chosen.len(), "draws_per_table": draws, "codim0_tables": skipped})),
    )?;
    e.finish()?;
    Ok(EXIT_OK)
}

fn cmd_verify(o: &Options, out: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = verify::VerifyConfig {
        quick: o.quick,
        seed: o.seed,
    };
    let mut e = Emitter::new(
        out,
        o.format,
        Header {
            command: "verify",
            spec_hash: None,
            seed: Some(o.seed),
        },
    );
    let mut all = true;
    for id in verify::CRITERIA {
        let rep = verify::run_criterion(id, &cfg)?;
        all &= rep.pass();
        let checks: Vec<Value> = rep
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail}))
            .collect();
        e.emit(
            "criterion",
            fields(json!({"id": rep.id, "title": rep.title, "pass": rep.pass(), "checks": checks})),
        )?;
    }
    e.emit("summary", fields(json!({"pass": all, "quick": o.quick})))?;
    e.finish()?;
    Ok(if all { EXIT_OK } else { EXIT_VIOLATION })
}
