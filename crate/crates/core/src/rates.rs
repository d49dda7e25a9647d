//! Achievable rates for both setups and the baseline schemes.

use alloc::vec::Vec;

use crate::model::{MultiUserSpec, SingleUserSpec, SystemSpec};
use crate::partition::{allocate_with, interval_table, sum_sqrt_nu, Aggregates, Allocation, IntervalTable};
use crate::single_level::{basic_rate, centralized_rate, single_level_rate};

/// Multi-user rate of the memory-sharing scheme with its analytic companions.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    /// Exact rate `sum_i R_i(M)`.
    pub total: f64,
    /// Rate of each level (canonical order).
    pub per_level: Vec<f64>,
    /// Closed-form approximation, clamped at zero.
    pub approx: f64,
    /// Per-level upper bounds on `R_i(M)`.
    pub upper_bounds: Vec<f64>,
    /// Allocation and partition used.
    pub allocation: Allocation,
}

impl RateBreakdown {
    /// Sum of the per-level upper bounds.
    pub fn upper_bound_total(&self) -> f64 {
        self.upper_bounds.iter().sum()
    }
}

/// Rate of the memory-sharing scheme using a prebuilt interval table.
pub fn multiuser_rate_with(spec: &MultiUserSpec, table: &IntervalTable, memory: f64) -> RateBreakdown {
    let allocation = allocate_with(spec, table, memory);
    let k = spec.caches();
    let per_level: Vec<f64> = spec
        .levels()
        .iter()
        .zip(&allocation.per_level)
        .map(|(l, &m)| single_level_rate(m, k, l.files, l.users_per_cache, l.degree))
        .collect();
    let total = per_level.iter().sum();
    let approx = approximate_rate(spec, &allocation);
    let upper_bounds = level_upper_bounds(spec, &allocation);
    RateBreakdown {
        total,
        per_level,
        approx,
        upper_bounds,
        allocation,
    }
}

/// Rate of the memory-sharing scheme at `memory`.
pub fn multiuser_rate(spec: &MultiUserSpec, memory: f64) -> RateBreakdown {
    multiuser_rate_with(spec, &interval_table(spec), memory)
}

/// Scheme run inside each level when the allocation is given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsystemScheme {
    /// Decentralized random placement with coloring.
    Decentralized,
    /// Centralized subset placement with memory sharing between corner points (degree 1 only).
    Centralized,
}

/// Rate when level `i` receives memory `per_level[i]` and runs `scheme` on its own.
pub fn fixed_allocation_rate(spec: &MultiUserSpec, per_level: &[f64], scheme: SubsystemScheme) -> Vec<f64> {
    let k = spec.caches();
    spec.levels()
        .iter()
        .zip(per_level)
        .map(|(l, &m)| match scheme {
            SubsystemScheme::Decentralized => single_level_rate(m, k, l.files, l.users_per_cache, l.degree),
            SubsystemScheme::Centralized => centralized_rate(m, k, l.files, l.users_per_cache),
        })
        .collect()
}

/// Closed-form approximation of the memory-sharing rate.
///
/// Uses `sum_H K U_h + S_I^2 / (M - T_J + V_I) - sum_I d_i U_i`, clamped at zero.
/// The denominator keeps the `V_I` term so that the expression stays finite when
/// `M = T_J`.
fn approximate_rate(spec: &MultiUserSpec, allocation: &Allocation) -> f64 {
    let k = spec.k();
    let p = &allocation.partition;
    let agg = Aggregates::of(spec, p);
    let h_part: f64 = p.h().iter().map(|&h| k * spec.levels()[h].u()).sum();
    let i_set = p.i();
    if i_set.is_empty() || allocation.mtilde.is_none() {
        return h_part.max(0.0);
    }
    let denom = allocation.memory - agg.t_j + agg.v_i;
    let du: f64 = i_set.iter().map(|&i| spec.levels()[i].d() * spec.levels()[i].u()).sum();
    (h_part + agg.s_i * agg.s_i / denom - du).max(0.0)
}

/// Per-level upper bounds on the memory-sharing rate.
fn level_upper_bounds(spec: &MultiUserSpec, allocation: &Allocation) -> Vec<f64> {
    let k = spec.k();
    let beta = spec.beta().value();
    let p = &allocation.partition;
    let r = &allocation.refined;
    let agg = Aggregates::of(spec, p);
    let denom = allocation.memory - agg.t_j + agg.v_i;
    let rest: Vec<usize> = r.i0.iter().chain(&r.iprime).copied().collect();
    let s_rest = sum_sqrt_nu(spec, &rest);
    spec.levels()
        .iter()
        .enumerate()
        .map(|(i, l)| match p.class(i) {
            crate::partition::Class::H => k * l.u(),
            crate::partition::Class::J => 0.0,
            crate::partition::Class::I => {
                // the I1 form assumes a single I1 level; the generic form holds for every I level
                if r.i1.len() == 1 && r.i1.contains(&i) && !r.i0.contains(&i) {
                    let scale = l.d() * l.u() / beta;
                    scale * (1.0 - (allocation.memory - agg.t_j) / l.full_storage()) + scale * s_rest / l.sqrt_nu()
                } else {
                    2.0 * agg.s_i * l.sqrt_nu() / denom
                }
            }
        })
        .collect()
}

/// Split of the single-user levels used by the clustering strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuPartition {
    /// Levels with `M < N_h/K_h`: served without caching.
    pub hprime: Vec<usize>,
    /// Remaining levels, clustered into one super-level.
    pub iprime: Vec<usize>,
    /// `M < N/K`, `K <= 5` and `M <= N/6`.
    pub g: Vec<usize>,
    /// `M < N/K` and `K >= 6`.
    pub h: Vec<usize>,
    /// `N/K <= M <= N/6`.
    pub i: Vec<usize>,
    /// `M > N/6`.
    pub j: Vec<usize>,
    /// `N_J = sum_{j in J} N_j`.
    pub n_j: u64,
}

/// Classifies single-user levels at `memory`.
pub fn su_partition(spec: &SingleUserSpec, memory: f64) -> SuPartition {
    let mut p = SuPartition {
        hprime: Vec::new(),
        iprime: Vec::new(),
        g: Vec::new(),
        h: Vec::new(),
        i: Vec::new(),
        j: Vec::new(),
        n_j: 0,
    };
    for (idx, l) in spec.levels().iter().enumerate() {
        let n = l.files as f64;
        let ki = l.users as f64;
        if memory < n / ki {
            p.hprime.push(idx);
        } else {
            p.iprime.push(idx);
        }
        if memory > n / 6.0 {
            p.j.push(idx);
            p.n_j += l.files;
        } else if memory < n / ki {
            if l.users <= 5 {
                p.g.push(idx);
            } else {
                p.h.push(idx);
            }
        } else {
            p.i.push(idx);
        }
    }
    p
}

/// Single-user clustering rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SuRateBreakdown {
    /// Achievable rate: the better of the two clusterings below.
    pub total: f64,
    /// Uncached `H'` levels plus the `I'` cluster.
    pub hprime_cluster_rate: f64,
    /// Uncached `G` and `H` levels plus the `I` and `J` cluster.
    pub refined_cluster_rate: f64,
    /// `5|G| + sum_H K_h + sum_I N_i/M` plus the piecewise `J` term.
    pub refined_upper: f64,
    /// Rate when the level of each user is known in advance.
    pub prior_knowledge: f64,
    /// Level classes at this memory.
    pub partition: SuPartition,
}

/// Rate of clustering `cluster` into one super-level and serving the rest uncached.
pub fn cluster_rate(spec: &SingleUserSpec, memory: f64, cluster: &[usize]) -> f64 {
    let mut uncached = 0u64;
    let mut files = 0u64;
    let mut users = 0u64;
    for (idx, l) in spec.levels().iter().enumerate() {
        if cluster.contains(&idx) {
            files += l.files;
            users += l.users;
        } else {
            uncached += l.users;
        }
    }
    let clustered = if users == 0 { 0.0 } else { basic_rate(memory, users, files) };
    uncached as f64 + clustered
}

/// Piecewise upper bound on the `J` cluster's contribution.
pub fn su_j_term(memory: f64, n_j: u64) -> f64 {
    let nj = n_j as f64;
    if n_j == 0 || memory >= nj {
        0.0
    } else if memory < nj / 6.0 {
        nj / memory
    } else {
        6.0 * (1.0 - memory / nj)
    }
}

/// Rate when each cache knows the level of its user: `sum min{K_i, N_i/M} (1 - M/N_i)^+`.
pub fn prior_knowledge_rate(spec: &SingleUserSpec, memory: f64) -> f64 {
    spec.levels()
        .iter()
        .map(|l| basic_rate(memory, l.users, l.files))
        .sum()
}

/// Single-user clustering rate at `memory`.
pub fn singleuser_rate(spec: &SingleUserSpec, memory: f64) -> SuRateBreakdown {
    let memory = memory.max(0.0);
    let partition = su_partition(spec, memory);
    let hprime_cluster_rate = cluster_rate(spec, memory, &partition.iprime);
    let ij: Vec<usize> = partition.i.iter().chain(&partition.j).copied().collect();
    let refined_cluster_rate = cluster_rate(spec, memory, &ij);
    let levels = spec.levels();
    let mut refined_upper = 5.0 * partition.g.len() as f64;
    refined_upper += partition.h.iter().map(|&h| levels[h].users as f64).sum::<f64>();
    refined_upper += partition.i.iter().map(|&i| levels[i].files as f64 / memory).sum::<f64>();
    refined_upper += su_j_term(memory, partition.n_j);
    SuRateBreakdown {
        total: hprime_cluster_rate.min(refined_cluster_rate),
        hprime_cluster_rate,
        refined_cluster_rate,
        refined_upper,
        prior_knowledge: prior_knowledge_rate(spec, memory),
        partition,
    }
}

/// Worst-case rate of LFU-style placement.
///
/// Uncoded: every cache holds the same most popular whole files (plus a
/// fraction of the next one); the adversary requests distinct unstored files
/// first. Coded: levels are stored in full in popularity order and the level
/// where memory runs out gets the remainder as a coded single-level system.
pub fn lfu_rate(spec: &SystemSpec, memory: f64, coded: bool) -> f64 {
    let (k, levels): (u64, Vec<(u64, u64, u64, u64)>) = match spec {
        SystemSpec::MultiUser(s) => (
            s.caches(),
            s.levels()
                .iter()
                .map(|l| (l.files, s.caches() * l.users_per_cache, l.users_per_cache, l.degree))
                .collect(),
        ),
        SystemSpec::SingleUser(s) => (
            s.caches(),
            s.levels().iter().map(|l| (l.files, l.users, 0, 1)).collect(),
        ),
    };
    let mut remaining = memory.max(0.0);
    let mut rate = 0.0;
    for (files, users, upc, degree) in levels {
        let n = files as f64;
        if coded {
            let need = n / degree as f64;
            let given = remaining.min(need);
            remaining -= given;
            rate += if upc > 0 {
                single_level_rate(given, k, files, upc, degree)
            } else {
                basic_rate(given, users, files)
            };
        } else {
            let given = remaining.min(n);
            remaining -= given;
            let whole = libm::floor(given);
            let frac = given - whole;
            let unstored = n - whole - if frac > 0.0 { 1.0 } else { 0.0 };
            let users = users as f64;
            let mut level_rate = users.min(unstored);
            if users > unstored && frac > 0.0 {
                level_rate += 1.0 - frac;
            }
            rate += level_rate;
        }
    }
    rate
}

/// Rate when every file receives the same share `M / sum N_i` of each cache.
pub fn uniform_sharing_rate(spec: &MultiUserSpec, memory: f64) -> f64 {
    let total: f64 = spec.levels().iter().map(|l| l.n()).sum();
    let m = memory.max(0.0) / total;
    spec.levels()
        .iter()
        .map(|l| single_level_rate(m * l.n(), spec.caches(), l.files, l.users_per_cache, l.degree))
        .sum()
}

/// One row of a rate curve; schemes that do not apply to the setup are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    /// Memory `M`.
    pub memory: f64,
    /// Memory-sharing (multi-user).
    pub memory_sharing: Option<f64>,
    /// Uncoded LFU.
    pub lfu: Option<f64>,
    /// Coded LFU.
    pub coded_lfu: Option<f64>,
    /// Uniform sharing (multi-user).
    pub uniform: Option<f64>,
    /// Clustering (single-user).
    pub single_user: Option<f64>,
    /// Prior-knowledge rate (single-user).
    pub prior: Option<f64>,
}

/// Evaluates every applicable scheme at one memory value.
pub fn curve_row(spec: &SystemSpec, table: Option<&IntervalTable>, memory: f64) -> CurveRow {
    match spec {
        SystemSpec::MultiUser(s) => {
            let rate = match table {
                Some(t) => multiuser_rate_with(s, t, memory).total,
                None => multiuser_rate(s, memory).total,
            };
            CurveRow {
                memory,
                memory_sharing: Some(rate),
                lfu: Some(lfu_rate(spec, memory, false)),
                coded_lfu: Some(lfu_rate(spec, memory, true)),
                uniform: Some(uniform_sharing_rate(s, memory)),
                single_user: None,
                prior: None,
            }
        }
        SystemSpec::SingleUser(s) => {
            let r = singleuser_rate(s, memory);
            CurveRow {
                memory,
                memory_sharing: None,
                lfu: Some(lfu_rate(spec, memory, false)),
                coded_lfu: Some(lfu_rate(spec, memory, true)),
                uniform: None,
                single_user: Some(r.total),
                prior: Some(r.prior_knowledge),
            }
        }
    }
}

/// Evaluates all schemes over a memory grid, rows in grid order.
pub fn rate_curve(spec: &SystemSpec, grid: &[f64]) -> Vec<CurveRow> {
    let table = spec.as_multi_user().map(interval_table);
    grid.iter().map(|&m| curve_row(spec, table.as_ref(), m)).collect()
}
