//! Subcommand definitions and handlers.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlcache_core::bounds::{
    best_multiuser_lower_bound_with, gap_row, multiuser_lower_bound, singleuser_lower_bound, small_example_optimum,
    BoundOrigin, BoundParams, SuBoundParams, Weighting,
};
use mlcache_core::discretize::{optimize_access, split_levels, DEFAULT_LATTICE};
use mlcache_core::model::{validate, MultiUserSpec, Ratio, SystemSpec};
use mlcache_core::partition::{allocate_with, interval_table, Class, ThresholdKind};
use mlcache_core::rates::{curve_row, fixed_allocation_rate, multiuser_rate_with, singleuser_rate, SubsystemScheme};
use mlcache_core::sim::{
    simulate_trial, small_example_scheme, stochastic_trial, summarize, Corner, SimError, SimReport, StochasticModel,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::io::{join_levels, load_spec, parse_grid, parse_popularity, read_file, sig6, sig6_opt, SpecDoc};
use crate::{CliError, Format, Report};

/// Planner, analyzer and simulator for multi-level coded caching.
#[derive(Debug, Parser)]
#[command(name = "mlcache", version, about)]
pub struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress diagnostics on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the regularity conditions of a spec.
    Validate(SpecArg),
    /// Print the memory breakpoints and partitions of a multi-user spec.
    Table(SpecArg),
    /// Achievable rate at one memory value.
    Rate(RateArgs),
    /// Rates of every applicable scheme over a memory grid.
    Curve(GridArgs),
    /// Lower bound on the optimal rate at one memory value.
    Bound(BoundArgs),
    /// Ratio of achievable rate to lower bound over a memory grid.
    Gap(GridArgs),
    /// Bit-level placement and delivery simulation.
    Simulate(SimulateArgs),
    /// Split a popularity list into levels.
    Discretize(DiscretizeArgs),
    /// Choose access degrees under cost constraints.
    AccessOpt(AccessArgs),
    /// Exact optimum and corner schemes of the two-cache example.
    SmallExample(SmallExampleArgs),
}

#[derive(Debug, Args)]
struct SpecArg {
    /// Spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Decentralized,
    Centralized,
}

#[derive(Debug, Args)]
struct RateArgs {
    /// Spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Cache memory `M`, in files.
    #[arg(long)]
    memory: f64,
    /// Fixed memory fractions per level, in spec order; replaces the computed allocation.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Scheme run inside each level with `--alpha`.
    #[arg(long, value_enum, default_value = "decentralized", requires = "alpha")]
    scheme: SchemeArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightingArg {
    Exact,
    Halved,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Exact => Weighting::Exact,
            WeightingArg::Halved => Weighting::Halved,
        }
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Memory grid `start:stop:step`, or a single value.
    #[arg(long)]
    m_grid: String,
    /// Per-level weight rule of the multi-user bound (gap only).
    #[arg(long, value_enum, default_value = "exact")]
    weighting: WeightingArg,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Cache memory `M`, in files.
    #[arg(long)]
    memory: f64,
    /// Per-level weight rule of the multi-user bound.
    #[arg(long, value_enum, default_value = "exact")]
    weighting: WeightingArg,
    /// Broadcasts per round (multi-user); searched when absent.
    #[arg(long, requires_all = ["b", "s"])]
    t: Option<u64>,
    /// Number of rounds (multi-user) or broadcasts (single-user).
    #[arg(long, requires = "s")]
    b: Option<u64>,
    /// Per-level group counts (multi-user) or caches (single-user), in spec order.
    #[arg(long, value_delimiter = ',', requires = "b")]
    s: Option<Vec<u64>>,
    /// Caches given jointly to the fully stored levels (single-user).
    #[arg(long, default_value_t = 0)]
    s_j: u64,
    /// Files of the fully stored levels decoded (single-user).
    #[arg(long, default_value_t = 0)]
    n_j: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Spec file (JSON, multi-user).
    #[arg(long)]
    spec: PathBuf,
    /// Cache memory `M`, in files.
    #[arg(long)]
    memory: f64,
    /// File size `F` in bits.
    #[arg(long, default_value_t = 1 << 12)]
    file_bits: u64,
    /// Seed of the first trial; trial `t` uses `seed + t`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of trials.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Draw demands from a popularity list instead of the worst case.
    #[arg(long, requires_all = ["popularity", "users"])]
    stochastic: bool,
    /// Popularity CSV (`rank,weight`); the spec's level sizes cut it into levels.
    #[arg(long, requires = "stochastic")]
    popularity: Option<PathBuf>,
    /// Total number of users.
    #[arg(long, requires = "stochastic")]
    users: Option<u64>,
}

#[derive(Debug, Args)]
struct DiscretizeArgs {
    /// Popularity CSV (`rank,weight`).
    #[arg(long)]
    popularity: PathBuf,
    /// Number of levels.
    #[arg(long)]
    levels: usize,
    /// Number of caches `K`.
    #[arg(long)]
    caches: u64,
    /// Cache memory as a fraction of the number of files.
    #[arg(long)]
    memory_frac: f64,
    /// Total number of users.
    #[arg(long)]
    users: u64,
    /// Number of candidate cut positions.
    #[arg(long, default_value_t = DEFAULT_LATTICE)]
    lattice: usize,
    /// Let levels be empty, so more levels never do worse.
    #[arg(long)]
    allow_empty: bool,
}

#[derive(Debug, Args)]
struct AccessArgs {
    /// Spec file (JSON, multi-user).
    #[arg(long)]
    spec: PathBuf,
    /// Cache memory `M`, in files.
    #[arg(long)]
    memory: f64,
    /// Largest degree allowed.
    #[arg(long)]
    d_max: u64,
    /// Largest user-weighted average degree, as `a/b` or an integer.
    #[arg(long)]
    d_avg: String,
}

#[derive(Debug, Args)]
struct SmallExampleArgs {
    /// Number of level-2 files.
    #[arg(long, default_value_t = 4)]
    n2: u64,
    /// Cache memory `M`, in files.
    #[arg(long)]
    memory: f64,
    /// File size `F` in bits for the corner-scheme check.
    #[arg(long, default_value_t = 1 << 10)]
    file_bits: u64,
}

type Outcome = Result<(Report, Option<CliError>), CliError>;

pub(crate) fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate(a) => done(validate_cmd(&a.spec)?),
        Command::Table(a) => done(table_cmd(&a.spec)?),
        Command::Rate(a) => done(rate_cmd(a)?),
        Command::Curve(a) => done(curve_cmd(a)?),
        Command::Bound(a) => done(bound_cmd(a)?),
        Command::Gap(a) => done(gap_cmd(a)?),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Discretize(a) => done(discretize_cmd(a)?),
        Command::AccessOpt(a) => done(access_cmd(a)?),
        Command::SmallExample(a) => done(small_example_cmd(a)?),
    }
}

fn done(report: Report) -> Outcome {
    Ok((report, None))
}

fn model_err(e: impl std::fmt::Display) -> CliError {
    CliError::Model(e.to_string())
}

fn sim_err(e: SimError) -> CliError {
    match e {
        SimError::Decode { .. } => CliError::Decode(e.to_string()),
        other => CliError::Model(other.to_string()),
    }
}

fn check_memory(memory: f64) -> Result<(), CliError> {
    if memory.is_finite() && memory >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("memory {memory} must be finite and nonnegative")))
    }
}

fn multi_user(spec: &SystemSpec, command: &str) -> Result<MultiUserSpec, CliError> {
    spec.as_multi_user()
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("{command} needs a multi-user spec")))
}

/// 1-based label of each canonical level in the caller's numbering.
fn labels(spec: &SystemSpec) -> Vec<usize> {
    spec.original_index().iter().map(|&o| o + 1).collect()
}

/// Reorders canonical per-level values into input order.
fn to_input<T: Clone>(orig: &[usize], canonical: &[T]) -> Vec<T> {
    let mut out = canonical.to_vec();
    for (c, &o) in orig.iter().enumerate() {
        out[o] = canonical[c].clone();
    }
    out
}

/// Reorders input-order per-level values into canonical order.
fn to_canonical<T: Clone>(orig: &[usize], input: &[T]) -> Vec<T> {
    orig.iter().map(|&o| input[o].clone()).collect()
}

fn class_label(c: Class) -> &'static str {
    match c {
        Class::H => "H",
        Class::I => "I",
        Class::J => "J",
    }
}

fn sorted_labels(lab: &[usize], set: &[usize]) -> String {
    let mut v: Vec<usize> = set.iter().map(|&i| lab[i]).collect();
    v.sort_unstable();
    join_levels(&v)
}

fn strings<const N: usize>(cols: [&str; N]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn validate_cmd(path: &Path) -> Result<Report, CliError> {
    let spec = load_spec(path)?;
    let v = validate(&spec);
    let mut rows = vec![
        vec!["files_vs_users".into(), v.files_vs_users.to_string()],
        vec!["separation".into(), v.separation.to_string()],
        vec!["regular".into(), v.regular().to_string()],
    ];
    let lab = labels(&spec);
    for (i, r) in v.ratios.iter().enumerate() {
        rows.push(vec![format!("ratio_{}_{}", lab[i], lab[i + 1]), sig6(*r)]);
    }
    Ok(Report {
        header: strings(["check", "value"]),
        rows,
        json: json!({
            "spec": SpecDoc::of(&spec),
            "files_vs_users": v.files_vs_users,
            "separation": v.separation,
            "regular": v.regular(),
            "ratios": v.ratios,
            "ratio_pairs": (0..v.ratios.len()).map(|i| [lab[i], lab[i + 1]]).collect::<Vec<_>>(),
            "beta": v.beta.to_string(),
            "warnings": v.warnings,
        }),
        default_format: Format::Csv,
        notes: v.warnings.clone(),
    })
}

fn table_cmd(path: &Path) -> Result<Report, CliError> {
    let spec = load_spec(path)?;
    let lab = labels(&spec);
    let s = multi_user(&spec, "table")?;
    let table = interval_table(&s);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (t, ((th, &y), p)) in table
        .thresholds()
        .iter()
        .zip(table.boundaries())
        .zip(table.partitions())
        .enumerate()
    {
        let kind = match th.kind {
            ThresholdKind::Lower => "m",
            ThresholdKind::Upper => "M",
        };
        let (h, i, j) = (sorted_labels(&lab, &p.h()), sorted_labels(&lab, &p.i()), sorted_labels(&lab, &p.j()));
        rows.push(vec![
            (t + 1).to_string(),
            sig6(th.value),
            kind.into(),
            lab[th.level].to_string(),
            sig6(y),
            h.clone(),
            i.clone(),
            j.clone(),
        ]);
        entries.push(json!({
            "t": t + 1, "x_t": th.value, "kind": kind, "level": lab[th.level],
            "Y_t": y, "H": h, "I": i, "J": j,
        }));
    }
    Ok(Report {
        header: strings(["t", "x_t", "kind", "level", "Y_t", "H", "I", "J"]),
        rows,
        json: Value::Array(entries),
        default_format: Format::Csv,
        notes: Vec::new(),
    })
}

fn rate_cmd(a: &RateArgs) -> Result<Report, CliError> {
    check_memory(a.memory)?;
    let spec = load_spec(&a.spec)?;
    let lab = labels(&spec);
    let orig = spec.original_index().to_vec();
    match &spec {
        SystemSpec::MultiUser(s) => {
            let (per_memory, per_rate, classes, upper, approx, notes) = match &a.alpha {
                Some(alpha) => {
                    if alpha.len() != s.len() {
                        return Err(CliError::Usage(format!("alpha has {} entries for {} levels", alpha.len(), s.len())));
                    }
                    if alpha.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || alpha.iter().sum::<f64>() > 1.0 + 1e-9 {
                        return Err(CliError::Model("alpha must be nonnegative and sum to at most 1".into()));
                    }
                    let mem: Vec<f64> = to_canonical(&orig, alpha).iter().map(|x| x * a.memory).collect();
                    let scheme = match a.scheme {
                        SchemeArg::Decentralized => SubsystemScheme::Decentralized,
                        SchemeArg::Centralized => SubsystemScheme::Centralized,
                    };
                    let rates = fixed_allocation_rate(s, &mem, scheme);
                    (mem, rates, None, None, None, Vec::new())
                }
                None => {
                    let rb = multiuser_rate_with(s, &interval_table(s), a.memory);
                    let notes = rb.allocation.refined.warning.iter().cloned().collect();
                    let classes: Vec<&str> = rb.allocation.partition.classes().iter().map(|&c| class_label(c)).collect();
                    (
                        rb.allocation.per_level.clone(),
                        rb.per_level.clone(),
                        Some(classes),
                        Some(rb.upper_bounds.clone()),
                        Some(rb.approx),
                        notes,
                    )
                }
            };
            let total: f64 = per_rate.iter().sum();
            let mut rows = Vec::new();
            let mut levels = Vec::new();
            for o in 0..s.len() {
                let c = orig.iter().position(|&x| x == o).expect("permutation");
                let class = classes.as_ref().map(|v| v[c]);
                let ub = upper.as_ref().map(|v| v[c]);
                rows.push(vec![
                    lab[c].to_string(),
                    class.unwrap_or("").into(),
                    sig6(per_memory[c]),
                    sig6(per_rate[c]),
                    sig6_opt(ub),
                ]);
                levels.push(json!({
                    "level": lab[c], "class": class, "memory": per_memory[c],
                    "rate": per_rate[c], "upper_bound": ub,
                }));
            }
            rows.push(vec![
                "total".into(),
                String::new(),
                sig6(per_memory.iter().sum()),
                sig6(total),
                sig6_opt(upper.as_ref().map(|v| v.iter().sum())),
            ]);
            Ok(Report {
                header: strings(["level", "class", "memory", "rate", "upper_bound"]),
                rows,
                json: json!({
                    "memory": a.memory, "total": total, "approx": approx,
                    "upper_bound_total": upper.as_ref().map(|v| v.iter().sum::<f64>()),
                    "levels": levels,
                }),
                default_format: Format::Csv,
                notes,
            })
        }
        SystemSpec::SingleUser(s) => {
            if a.alpha.is_some() {
                return Err(CliError::Usage("--alpha applies to multi-user specs only".into()));
            }
            let r = singleuser_rate(s, a.memory);
            let items = [
                ("total", r.total),
                ("hprime_cluster_rate", r.hprime_cluster_rate),
                ("refined_cluster_rate", r.refined_cluster_rate),
                ("refined_upper", r.refined_upper),
                ("prior_knowledge", r.prior_knowledge),
            ];
            Ok(Report {
                header: strings(["quantity", "value"]),
                rows: items.iter().map(|(k, v)| vec![k.to_string(), sig6(*v)]).collect(),
                json: json!({
                    "memory": a.memory, "total": r.total,
                    "hprime_cluster_rate": r.hprime_cluster_rate,
                    "refined_cluster_rate": r.refined_cluster_rate,
                    "refined_upper": r.refined_upper,
                    "prior_knowledge": r.prior_knowledge,
                }),
                default_format: Format::Csv,
                notes: Vec::new(),
            })
        }
    }
}

fn curve_cmd(a: &GridArgs) -> Result<Report, CliError> {
    let spec = load_spec(&a.spec)?;
    let grid = parse_grid(&a.m_grid)?;
    let table = spec.as_multi_user().map(interval_table);
    let rows: Vec<_> = grid.par_iter().map(|&m| curve_row(&spec, table.as_ref(), m)).collect();
    Ok(Report {
        header: strings(["M", "R_ms", "R_lfu", "R_coded_lfu", "R_uniform", "R_su", "R_prior"]),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    sig6(r.memory),
                    sig6_opt(r.memory_sharing),
                    sig6_opt(r.lfu),
                    sig6_opt(r.coded_lfu),
                    sig6_opt(r.uniform),
                    sig6_opt(r.single_user),
                    sig6_opt(r.prior),
                ]
            })
            .collect(),
        json: Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "M": r.memory, "R_ms": r.memory_sharing, "R_lfu": r.lfu,
                        "R_coded_lfu": r.coded_lfu, "R_uniform": r.uniform,
                        "R_su": r.single_user, "R_prior": r.prior,
                    })
                })
                .collect(),
        ),
        default_format: Format::Csv,
        notes: Vec::new(),
    })
}

fn bound_cmd(a: &BoundArgs) -> Result<Report, CliError> {
    check_memory(a.memory)?;
    let spec = load_spec(&a.spec)?;
    let orig = spec.original_index().to_vec();
    let weighting: Weighting = a.weighting.into();
    let (value, t, b, s, lambda, origin) = match &spec {
        SystemSpec::MultiUser(m) => {
            let params = match (a.t, a.b, &a.s) {
                (Some(t), Some(b), Some(s)) => {
                    if s.len() != m.len() {
                        return Err(CliError::Usage(format!("s has {} entries for {} levels", s.len(), m.len())));
                    }
                    BoundParams::new(m, t, b, to_canonical(&orig, s), BoundOrigin::UserSupplied).with_weighting(m, weighting)
                }
                (None, None, None) => best_multiuser_lower_bound_with(m, &interval_table(m), a.memory, weighting).1,
                _ => return Err(CliError::Usage("give all of --t, --b and --s, or none".into())),
            };
            let v = multiuser_lower_bound(m, a.memory, &params).map_err(model_err)?;
            (
                v,
                Some(params.t),
                params.b,
                to_input(&orig, &params.s),
                Some(to_input(&orig, &params.lambda)),
                params.origin.to_string(),
            )
        }
        SystemSpec::SingleUser(su) => {
            if a.t.is_some() {
                return Err(CliError::Usage("--t applies to multi-user specs only".into()));
            }
            let (params, origin) = match (a.b, &a.s) {
                (Some(b), Some(s)) => {
                    if s.len() != su.len() {
                        return Err(CliError::Usage(format!("s has {} entries for {} levels", s.len(), su.len())));
                    }
                    let p = SuBoundParams {
                        b,
                        s: to_canonical(&orig, s),
                        s_j: a.s_j,
                        n_j: a.n_j,
                    };
                    (p, "user")
                }
                _ => (SuBoundParams::standard(su, a.memory), "standard"),
            };
            let v = singleuser_lower_bound(su, a.memory, Some(&params)).map_err(model_err)?;
            (v, None, params.b, to_input(&orig, &params.s), None, origin.to_string())
        }
    };
    let join_u = |v: &[u64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-");
    let join_f = |v: &[f64]| v.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join("-");
    Ok(Report {
        header: strings(["M", "R_lb", "t", "b", "s", "lambda", "origin"]),
        rows: vec![vec![
            sig6(a.memory),
            sig6(value),
            t.map(|t| t.to_string()).unwrap_or_default(),
            b.to_string(),
            join_u(&s),
            lambda.as_deref().map(join_f).unwrap_or_default(),
            origin.clone(),
        ]],
        json: json!({
            "M": a.memory, "R_lb": value, "t": t, "b": b, "s": s, "lambda": lambda,
            "weighting": spec.as_multi_user().map(|_| weighting.to_string()),
            "origin": origin,
        }),
        default_format: Format::Csv,
        notes: Vec::new(),
    })
}

fn gap_cmd(a: &GridArgs) -> Result<Report, CliError> {
    let spec = load_spec(&a.spec)?;
    let grid = parse_grid(&a.m_grid)?;
    let table = spec.as_multi_user().map(interval_table);
    let weighting: Weighting = a.weighting.into();
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&m| gap_row(&spec, table.as_ref(), m, weighting))
        .collect();
    let worst = rows.iter().max_by(|x, y| x.ratio.total_cmp(&y.ratio));
    let notes = worst
        .map(|w| vec![format!("max ratio {} at M = {}", sig6(w.ratio), sig6(w.memory))])
        .unwrap_or_default();
    Ok(Report {
        header: strings(["M", "R_ach", "R_lb", "ratio", "lb_origin"]),
        rows: rows
            .iter()
            .map(|r| vec![sig6(r.memory), sig6(r.achievable), sig6(r.lower), sig6(r.ratio), r.origin.clone()])
            .collect(),
        json: Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "M": r.memory, "R_ach": r.achievable, "R_lb": r.lower,
                        "ratio": r.ratio.is_finite().then_some(r.ratio), "lb_origin": r.origin,
                    })
                })
                .collect(),
        ),
        default_format: Format::Csv,
        notes,
    })
}

fn report_json(r: &SimReport) -> Value {
    json!({
        "analytic_rate": r.analytic_rate,
        "empirical_mean": r.empirical_mean,
        "empirical_max": r.empirical_max,
        "decode_failures": r.decode_failures,
        "trials": r.trials,
        "seed": r.seed,
    })
}

fn simulate_cmd(a: &SimulateArgs) -> Outcome {
    check_memory(a.memory)?;
    if a.trials == 0 {
        return Err(CliError::Usage("at least one trial is needed".into()));
    }
    let spec = load_spec(&a.spec)?;
    let s = multi_user(&spec, "simulate")?;
    let seeds: Vec<u64> = (0..a.trials).map(|t| a.seed.wrapping_add(t)).collect();
    let mut notes = Vec::new();
    let report = if a.stochastic {
        let path = a.popularity.as_ref().expect("clap enforces --popularity");
        let weights = parse_popularity(&read_file(path)?)?;
        let total_files: u64 = s.levels().iter().map(|l| l.files).sum();
        if weights.len() as u64 != total_files {
            return Err(CliError::Model(format!(
                "popularity lists {} files but the spec has {total_files}",
                weights.len()
            )));
        }
        if s.max_degree() > 1 {
            notes.push("stochastic simulation uses degree 1 for every level".to_string());
        }
        let mut cuts = Vec::new();
        let mut acc = 0usize;
        for l in &s.levels()[..s.len() - 1] {
            acc += l.files as usize;
            cuts.push(acc);
        }
        let users = a.users.expect("clap enforces --users");
        let model = StochasticModel::new(&weights, &cuts, s.caches(), users).map_err(sim_err)?;
        let table = interval_table(&model.spec);
        let allocation = allocate_with(&model.spec, &table, a.memory);
        let analytic = multiuser_rate_with(&model.spec, &table, a.memory).total;
        let outcomes: Vec<_> = seeds
            .par_iter()
            .map(|&seed| stochastic_trial(&model, &allocation, a.file_bits, seed))
            .collect();
        summarize(analytic, a.seed, &outcomes).map_err(sim_err)?
    } else {
        let table = interval_table(&s);
        let allocation = allocate_with(&s, &table, a.memory);
        let analytic = multiuser_rate_with(&s, &table, a.memory).total;
        let outcomes: Vec<_> = seeds
            .par_iter()
            .map(|&seed| simulate_trial(&s, &allocation, a.file_bits, seed))
            .collect();
        summarize(analytic, a.seed, &outcomes).map_err(sim_err)?
    };
    let failure = (report.decode_failures > 0)
        .then(|| CliError::Decode(format!("{} of {} trials failed to decode", report.decode_failures, report.trials)));
    let out = Report {
        header: strings(["analytic_rate", "empirical_mean", "empirical_max", "decode_failures", "trials", "seed"]),
        rows: vec![vec![
            sig6(report.analytic_rate),
            sig6(report.empirical_mean),
            sig6(report.empirical_max),
            report.decode_failures.to_string(),
            report.trials.to_string(),
            report.seed.to_string(),
        ]],
        json: report_json(&report),
        default_format: Format::Json,
        notes,
    };
    Ok((out, failure))
}

fn discretize_cmd(a: &DiscretizeArgs) -> Result<Report, CliError> {
    let weights = parse_popularity(&read_file(&a.popularity)?)?;
    if !(a.memory_frac.is_finite() && a.memory_frac >= 0.0) {
        return Err(CliError::Usage("memory fraction must be finite and nonnegative".into()));
    }
    let memory = a.memory_frac * weights.len() as f64;
    let split = split_levels(&weights, a.levels, a.caches, memory, a.users, a.allow_empty, a.lattice).map_err(model_err)?;
    let spec = SystemSpec::MultiUser(split.model.spec.clone());
    let doc = SpecDoc::of(&spec);
    let levels = split.model.spec.levels_in_input_order();
    let mut rows = Vec::new();
    let mut start = 0u64;
    for (i, l) in levels.iter().enumerate() {
        rows.push(vec![
            (i + 1).to_string(),
            (start + 1).to_string(),
            (start + l.files).to_string(),
            l.files.to_string(),
            l.users_per_cache.to_string(),
            sig6(split.objective),
        ]);
        start += l.files;
    }
    Ok(Report {
        header: strings(["level", "first_rank", "last_rank", "files", "users_per_cache", "objective"]),
        rows,
        json: json!({
            "boundaries": split.boundaries,
            "spec": doc,
            "memory": memory,
            "objective": split.objective,
        }),
        default_format: Format::Json,
        notes: Vec::new(),
    })
}

fn access_cmd(a: &AccessArgs) -> Result<Report, CliError> {
    check_memory(a.memory)?;
    let spec = load_spec(&a.spec)?;
    let s = multi_user(&spec, "access-opt")?;
    let d_avg = Ratio::parse(&a.d_avg).map_err(|e| CliError::Usage(format!("--d-avg: {e}")))?;
    let plan = optimize_access(&s, a.memory, a.d_max, d_avg).map_err(model_err)?;
    let orig = s.original_index().to_vec();
    let chosen = s.with_degrees(&to_canonical(&orig, &plan.degrees)).map_err(model_err)?;
    let input = s.levels_in_input_order();
    Ok(Report {
        header: strings(["level", "files", "users_per_cache", "degree", "rate"]),
        rows: input
            .iter()
            .zip(&plan.degrees)
            .enumerate()
            .map(|(i, (l, d))| {
                vec![
                    (i + 1).to_string(),
                    l.files.to_string(),
                    l.users_per_cache.to_string(),
                    d.to_string(),
                    sig6(plan.rate),
                ]
            })
            .collect(),
        json: json!({
            "degrees": plan.degrees,
            "rate": plan.rate,
            "spec": SpecDoc::of(&SystemSpec::MultiUser(chosen)),
        }),
        default_format: Format::Json,
        notes: Vec::new(),
    })
}

fn small_example_cmd(a: &SmallExampleArgs) -> Result<Report, CliError> {
    check_memory(a.memory)?;
    let optimum = small_example_optimum(a.memory, a.n2).map_err(model_err)?;
    let corner = Corner::at_memory(a.memory, a.n2);
    let check = corner
        .map(|c| {
            small_example_scheme(c, a.n2, a.file_bits)
                .and_then(|s| s.verify_all())
                .map_err(sim_err)
        })
        .transpose()?;
    let mut notes = vec![format!("optimal rate {}", sig6(optimum))];
    if let Some(r) = &check {
        notes.push(format!(
            "corner scheme verified on {} request vectors, largest broadcast {} bits",
            r.requests, r.max_broadcast_bits
        ));
    }
    Ok(Report {
        header: strings(["M", "R_opt", "corner", "requests", "max_broadcast_bits", "scheme_rate"]),
        rows: vec![vec![
            sig6(a.memory),
            sig6(optimum),
            check.is_some().to_string(),
            check.as_ref().map(|r| r.requests.to_string()).unwrap_or_default(),
            check.as_ref().map(|r| r.max_broadcast_bits.to_string()).unwrap_or_default(),
            check.as_ref().map(|r| sig6(r.rate)).unwrap_or_default(),
        ]],
        json: json!({
            "n2": a.n2,
            "memory": a.memory,
            "optimal_rate": optimum,
            "corner": check.as_ref().map(|r| json!({
                "file_bits": a.file_bits,
                "cache_bits": r.cache_bits,
                "requests": r.requests,
                "max_broadcast_bits": r.max_broadcast_bits,
                "min_broadcast_bits": r.min_broadcast_bits,
                "rate": r.rate,
            })),
        }),
        default_format: Format::Csv,
        notes,
    })
}
