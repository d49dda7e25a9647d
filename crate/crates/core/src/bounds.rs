//! Lower bounds on the optimal rate, optimality gaps, and the exact optimum of
//! the two-cache example.
//!
//! The multi-user bound picks `t` broadcasts-per-round, `b` rounds and, per
//! level, `s_i` groups of caches; each level contributes
//! `lambda_i min{(s_i t - d_i + 1) U_i, N_i/(s_i b)}` and the memory costs
//! `(t/b) M`. A level may also be left out (`s_i = 0`): dropping users only
//! lowers the optimal rate, so the remaining levels still bound it from below.
//!
//! The weight `lambda_i` is the fraction of sliding windows of `s_i t` caches
//! in which every level-`i` user can be served a fresh file. That fraction is
//! `(K - (s_i t - d_i)) / K`; the coarser rule `1` if `s_i t = d_i` and `1/2`
//! otherwise never exceeds it. Both are available through [`Weighting`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::model::{LevelSpec, MultiUserSpec, SingleUserSpec, SystemSpec};
use crate::partition::{allocate_with, interval_table, IntervalTable};
use crate::rates::{multiuser_rate_with, singleuser_rate, su_partition};

/// Invalid bound parameters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    /// A parameter violates one of the lower-bound constraints.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The two-cache example needs at least four level-2 files.
    #[error("out of model: n2 = {0} but the example needs n2 >= 4")]
    OutOfModel(u64),
}

/// Where a parameter tuple came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundOrigin {
    /// Small cache count recipe.
    Case0,
    /// Empty `I1`, nonempty `J`.
    Case1a,
    /// Empty `I1` and `J`.
    Case1b,
    /// Single-level `I1`.
    Case2,
    /// Grid over `(t, b)` with per-level optimal `s_i`.
    GridSearch,
    /// Provided by the caller.
    UserSupplied,
}

impl fmt::Display for BoundOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundOrigin::Case0 => "case0",
            BoundOrigin::Case1a => "case1a",
            BoundOrigin::Case1b => "case1b",
            BoundOrigin::Case2 => "case2",
            BoundOrigin::GridSearch => "grid",
            BoundOrigin::UserSupplied => "user",
        })
    }
}

/// Rule for the per-level weight of the multi-user bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `1` if `s_i t = d_i`, `1/2` otherwise.
    Halved,
    /// `(K - (s_i t - d_i)) / K`.
    #[default]
    Exact,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Halved => "halved",
            Weighting::Exact => "exact",
        })
    }
}

/// Weight of a level with `s` groups at `t` caches per group; zero when `s = 0`.
pub fn level_weight(caches: u64, degree: u64, s: u64, t: u64, weighting: Weighting) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let st = s * t;
    match weighting {
        Weighting::Halved if st == degree => 1.0,
        Weighting::Halved => 0.5,
        Weighting::Exact => (caches + degree - st) as f64 / caches as f64,
    }
}

/// Parameters of the multi-user lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    /// Broadcasts per round.
    pub t: u64,
    /// Number of rounds.
    pub b: u64,
    /// Per-level group count; zero leaves the level out.
    pub s: Vec<u64>,
    /// Per-level weight under `weighting`, 0 for left-out levels.
    pub lambda: Vec<f64>,
    /// Rule that produced `lambda`.
    pub weighting: Weighting,
    /// Provenance.
    pub origin: BoundOrigin,
}

impl BoundParams {
    /// Builds a tuple with halved weights.
    pub fn new(spec: &MultiUserSpec, t: u64, b: u64, s: Vec<u64>, origin: BoundOrigin) -> Self {
        let mut p = Self {
            t,
            b,
            s,
            lambda: Vec::new(),
            weighting: Weighting::Halved,
            origin,
        };
        p.lambda = p.weights(spec, Weighting::Halved);
        p
    }

    /// The same tuple with weights recomputed under `weighting`.
    pub fn with_weighting(mut self, spec: &MultiUserSpec, weighting: Weighting) -> Self {
        self.lambda = self.weights(spec, weighting);
        self.weighting = weighting;
        self
    }

    fn weights(&self, spec: &MultiUserSpec, weighting: Weighting) -> Vec<f64> {
        spec.levels()
            .iter()
            .zip(&self.s)
            .map(|(l, &si)| level_weight(spec.caches(), l.degree, si, self.t, weighting))
            .collect()
    }

    /// Checks every constraint against `spec`.
    pub fn check(&self, spec: &MultiUserSpec) -> Result<(), BoundError> {
        let k = spec.caches();
        let half = k / 2;
        if self.t == 0 || self.t > k {
            return Err(BoundError::InvalidParams(format!("t = {} must lie in 1..={k}", self.t)));
        }
        if self.b == 0 {
            return Err(BoundError::InvalidParams("b must be at least 1".into()));
        }
        if self.s.len() != spec.len() {
            return Err(BoundError::InvalidParams(format!(
                "s has {} entries for {} levels",
                self.s.len(),
                spec.len()
            )));
        }
        for (i, (l, &si)) in spec.levels().iter().zip(&self.s).enumerate() {
            if si == 0 {
                continue;
            }
            let st = si.saturating_mul(self.t);
            if st < l.degree || st > half {
                return Err(BoundError::InvalidParams(format!(
                    "level {}: s*t = {st} must lie in {}..={half}",
                    spec.original_index()[i] + 1,
                    l.degree
                )));
            }
        }
        for (i, (&lam, (l, &si))) in self.lambda.iter().zip(spec.levels().iter().zip(&self.s)).enumerate() {
            if lam != level_weight(k, l.degree, si, self.t, self.weighting) {
                return Err(BoundError::InvalidParams(format!(
                    "level {}: lambda {lam} does not match s*t and d",
                    spec.original_index()[i] + 1
                )));
            }
        }
        Ok(())
    }
}

/// Contribution of one level for given `(s, t, b)`; zero when `s = 0`.
pub fn level_term(level: &LevelSpec, caches: u64, s: u64, t: u64, b: u64, weighting: Weighting) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let lambda = level_weight(caches, level.degree, s, t, weighting);
    let a = (s * t - level.degree + 1) as f64 * level.users_per_cache as f64;
    let c = level.files as f64 / (s as f64 * b as f64);
    lambda * a.min(c)
}

fn bound_value(spec: &MultiUserSpec, memory: f64, p: &BoundParams) -> f64 {
    let sum: f64 = spec
        .levels()
        .iter()
        .zip(&p.s)
        .zip(&p.lambda)
        .map(|((l, &s), &lambda)| {
            if s == 0 {
                return 0.0;
            }
            let a = (s * p.t - l.degree + 1) as f64 * l.users_per_cache as f64;
            lambda * a.min(l.files as f64 / (s as f64 * p.b as f64))
        })
        .sum();
    (sum - p.t as f64 / p.b as f64 * memory).max(0.0)
}

/// Lower bound for a given parameter tuple, clamped at zero.
pub fn multiuser_lower_bound(spec: &MultiUserSpec, memory: f64, params: &BoundParams) -> Result<f64, BoundError> {
    params.check(spec)?;
    Ok(bound_value(spec, memory, params))
}

/// Range of valid `s` for a level at a given `t`, if nonempty.
pub fn s_range(caches: u64, degree: u64, t: u64) -> Option<(u64, u64)> {
    let lo = degree.div_ceil(t);
    let hi = (caches / 2) / t;
    (lo >= 1 && lo <= hi).then_some((lo, hi))
}

/// The `s` maximizing a level's term for fixed `(t, b)`, or 0 if no `s` is valid.
///
/// Scans the whole admissible range, which has at most `K/2` values; the
/// smallest maximizer wins ties.
pub fn best_level_s(level: &LevelSpec, caches: u64, t: u64, b: u64, weighting: Weighting) -> u64 {
    let Some((lo, hi)) = s_range(caches, level.degree, t) else {
        return 0;
    };
    let mut best = lo;
    let mut best_val = level_term(level, caches, lo, t, b, weighting);
    for s in lo + 1..=hi {
        let v = level_term(level, caches, s, t, b, weighting);
        if v > best_val {
            best = s;
            best_val = v;
        }
    }
    best
}

fn case0_recipe(spec: &MultiUserSpec, memory: f64) -> Option<BoundParams> {
    let levels = spec.levels();
    let mut cumulative = 0.0;
    let mut star = None;
    for (i, l) in levels.iter().enumerate() {
        let next = cumulative + l.full_storage();
        if cumulative <= memory && memory <= next {
            star = Some(i);
            break;
        }
        cumulative = next;
    }
    let star = star?;
    let l = &levels[star];
    let b = (l.files).div_ceil(l.degree * l.users_per_cache);
    let s = levels.iter().map(|l| l.degree).collect();
    Some(BoundParams::new(spec, 1, b, s, BoundOrigin::Case0))
}

fn floor_u64(x: f64) -> u64 {
    if x.is_finite() && x > 0.0 {
        libm::floor(x) as u64
    } else {
        0
    }
}

fn ceil_u64(x: f64) -> u64 {
    if x.is_finite() && x > 0.0 {
        libm::ceil(x) as u64
    } else {
        0
    }
}

fn case1_2_recipe(spec: &MultiUserSpec, table: &IntervalTable, memory: f64) -> Option<BoundParams> {
    let alloc = allocate_with(spec, table, memory);
    let mt = alloc.mtilde?;
    let r = &alloc.refined;
    let levels = spec.levels();
    let k = spec.k();
    let beta = spec.beta().value();
    let mut s = alloc::vec![0u64; levels.len()];
    if r.i1.is_empty() {
        let i_set: Vec<usize> = alloc.partition.i();
        if !r.j.is_empty() {
            let delta = spec.max_degree() as f64 / beta;
            for &h in &r.h {
                s[h] = spec.caches() / 8;
            }
            for &i in &i_set {
                s[i] = floor_u64(levels[i].sqrt_n_over_u() / (8.0 * mt));
            }
            for &j in &r.j {
                s[j] = levels[j].degree;
            }
            let b = floor_u64(delta * mt * mt);
            Some(BoundParams::new(spec, 1, b, s, BoundOrigin::Case1a))
        } else {
            let root1 = levels[0].sqrt_n_over_u();
            let t = floor_u64(root1 / (32.0 * mt));
            for &h in &r.h {
                s[h] = floor_u64(2.0 * k * mt / root1);
            }
            for &i in &i_set {
                s[i] = floor_u64(2.0 * libm::sqrt(levels[i].n() / levels[i].u() / (levels[0].n() / levels[0].u())));
            }
            let b = floor_u64(8.0 * mt * root1);
            Some(BoundParams::new(spec, t, b, s, BoundOrigin::Case1b))
        }
    } else if r.i1.len() == 1 {
        let i1 = r.i1[0];
        let l1 = &levels[i1];
        let (g1, g2) = (2.965, 0.482);
        for &h in &r.h {
            s[h] = floor_u64(2.0 * beta * k);
        }
        for i in alloc.partition.i() {
            if i == i1 {
                continue;
            }
            let li = &levels[i];
            let ratio = (l1.u() / l1.n()) / (li.u() / li.n());
            s[i] = floor_u64(g1 * beta * li.sqrt_n_over_u() / mt + g2 * l1.d() * libm::sqrt(ratio));
        }
        s[i1] = l1.degree;
        for &j in &r.j {
            s[j] = levels[j].degree;
        }
        let b = ceil_u64(l1.n() / (l1.d() * l1.u()));
        Some(BoundParams::new(spec, 1, b, s, BoundOrigin::Case2))
    } else {
        None
    }
}

/// True when `K < D/beta`, the small cache count regime.
pub fn small_cache_regime(spec: &MultiUserSpec) -> bool {
    let beta = spec.beta();
    (spec.caches() as u128) * (beta.num() as u128) < (spec.max_degree() as u128) * (beta.den() as u128)
}

/// Case recipe for the regime `memory` falls in, if its tuple is valid.
pub fn case_params(spec: &MultiUserSpec, table: &IntervalTable, memory: f64) -> Option<BoundParams> {
    let p = if small_cache_regime(spec) {
        case0_recipe(spec, memory)
    } else {
        case1_2_recipe(spec, table, memory)
    }?;
    p.check(spec).ok().map(|_| p)
}

/// Largest `t` explored by the grid family.
pub const GRID_MAX_T: u64 = 8;
/// `b` ranges over `1 ..= 2^GRID_MAX_B_EXP`.
pub const GRID_MAX_B_EXP: u32 = 20;
/// Geometric steps per doubling of `b` in the grid family.
pub const GRID_B_STEPS_PER_OCTAVE: u32 = 20;

/// The `b` values of the grid family: `round(2^(e / steps))`, deduplicated, ascending.
pub fn grid_b_values() -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for e in 0..=GRID_MAX_B_EXP * GRID_B_STEPS_PER_OCTAVE {
        let b = libm::round(libm::exp2(e as f64 / GRID_B_STEPS_PER_OCTAVE as f64)) as u64;
        if out.last() != Some(&b) {
            out.push(b);
        }
    }
    out
}

/// Candidate tuples under `weighting`: the applicable recipe (if valid) followed by the grid family.
pub fn candidate_params_with(
    spec: &MultiUserSpec,
    table: &IntervalTable,
    memory: f64,
    weighting: Weighting,
) -> Vec<BoundParams> {
    let mut out = Vec::new();
    out.extend(case_params(spec, table, memory).map(|p| p.with_weighting(spec, weighting)));
    let k = spec.caches();
    let bs = grid_b_values();
    for t in 1..=k.min(GRID_MAX_T) {
        for &b in &bs {
            let s: Vec<u64> = spec
                .levels()
                .iter()
                .map(|l| best_level_s(l, k, t, b, weighting))
                .collect();
            if t > 1 && s.iter().all(|&x| x == 0) {
                continue;
            }
            out.push(BoundParams::new(spec, t, b, s, BoundOrigin::GridSearch).with_weighting(spec, weighting));
        }
    }
    out
}

/// Candidate tuples at `memory` with exact weights.
pub fn candidate_params(spec: &MultiUserSpec, memory: f64) -> Vec<BoundParams> {
    candidate_params_with(spec, &interval_table(spec), memory, Weighting::Exact)
}

/// Best bound over the candidates under `weighting`, first found on ties.
pub fn best_multiuser_lower_bound_with(
    spec: &MultiUserSpec,
    table: &IntervalTable,
    memory: f64,
    weighting: Weighting,
) -> (f64, BoundParams) {
    let mut best: Option<(f64, BoundParams)> = None;
    for p in candidate_params_with(spec, table, memory, weighting) {
        let v = bound_value(spec, memory, &p);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, p));
        }
    }
    best.expect("the grid family always yields a tuple for t = 1")
}

/// Best multi-user lower bound at `memory`, with exact weights.
pub fn best_multiuser_lower_bound(spec: &MultiUserSpec, memory: f64) -> (f64, BoundParams) {
    best_multiuser_lower_bound_with(spec, &interval_table(spec), memory, Weighting::Exact)
}

/// Parameters of the single-user lower bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuBoundParams {
    /// Number of broadcasts.
    pub b: u64,
    /// Caches given to each level outside `J` (zero for `J` levels).
    pub s: Vec<u64>,
    /// Caches given to the `J` levels jointly.
    pub s_j: u64,
    /// Files of the `J` levels decoded.
    pub n_j: u64,
}

impl SuBoundParams {
    /// Checks the constraints against `spec` at `memory`.
    pub fn check(&self, spec: &SingleUserSpec, memory: f64) -> Result<(), BoundError> {
        let p = su_partition(spec, memory);
        if self.b == 0 {
            return Err(BoundError::InvalidParams("b must be at least 1".into()));
        }
        if self.s.len() != spec.len() {
            return Err(BoundError::InvalidParams(format!(
                "s has {} entries for {} levels",
                self.s.len(),
                spec.len()
            )));
        }
        for (i, (l, &si)) in spec.levels().iter().zip(&self.s).enumerate() {
            if si > l.users {
                return Err(BoundError::InvalidParams(format!(
                    "level {}: s = {si} exceeds its {} users",
                    spec.original_index()[i] + 1,
                    l.users
                )));
            }
            if p.j.contains(&i) && si != 0 {
                return Err(BoundError::InvalidParams(format!(
                    "level {} is in J; its caches are counted by s_J",
                    spec.original_index()[i] + 1
                )));
            }
        }
        let j_users: u64 = p.j.iter().map(|&j| spec.levels()[j].users).sum();
        if self.s_j > j_users {
            return Err(BoundError::InvalidParams(format!(
                "s_J = {} exceeds the {j_users} users of the J levels",
                self.s_j
            )));
        }
        if self.n_j > p.n_j.min(self.s_j.saturating_mul(self.b)) {
            return Err(BoundError::InvalidParams(format!(
                "n_J = {} exceeds min(N_J, s_J b)",
                self.n_j
            )));
        }
        let used: u64 = self.s.iter().sum::<u64>() + self.s_j;
        if used > spec.caches() {
            return Err(BoundError::InvalidParams(format!(
                "{used} caches used, only {} available",
                spec.caches()
            )));
        }
        Ok(())
    }

    /// Parameters chosen by regime, as in the single-user gap analysis.
    pub fn standard(spec: &SingleUserSpec, memory: f64) -> Self {
        let levels = spec.levels();
        if memory < 1.0 / 6.0 {
            return Self {
                b: 1,
                s: levels.iter().map(|l| l.users).collect(),
                s_j: 0,
                n_j: 0,
            };
        }
        let p = su_partition(spec, memory);
        let b = ceil_u64(6.0 * memory).max(1);
        let mut s = alloc::vec![0u64; levels.len()];
        for &g in &p.g {
            s[g] = 1;
        }
        for &h in &p.h {
            s[h] = levels[h].users.div_ceil(6);
        }
        for &i in &p.i {
            s[i] = ceil_u64(levels[i].files as f64 / (6.0 * memory)).min(levels[i].users);
        }
        let nj = p.n_j as f64;
        let s_j = if p.n_j == 0 || memory >= nj {
            0
        } else if memory < nj / 6.0 {
            ceil_u64(nj / (6.0 * memory))
        } else {
            1
        };
        let n_j = p.n_j.min(s_j.saturating_mul(b));
        Self { b, s, s_j, n_j }
    }
}

fn su_bound_value(spec: &SingleUserSpec, memory: f64, p: &SuBoundParams) -> f64 {
    let b = p.b as f64;
    let mut v = 0.0;
    for (l, &s) in spec.levels().iter().zip(&p.s) {
        if s == 0 {
            continue;
        }
        let s = s as f64;
        v += s * ((l.files as f64 / (s * b)).min(1.0) - memory / b);
    }
    v += (p.n_j as f64 - p.s_j as f64 * memory) / b;
    v.max(0.0)
}

/// Single-user lower bound; standard parameters are used when none are given.
pub fn singleuser_lower_bound(
    spec: &SingleUserSpec,
    memory: f64,
    params: Option<&SuBoundParams>,
) -> Result<f64, BoundError> {
    match params {
        Some(p) => {
            p.check(spec, memory)?;
            Ok(su_bound_value(spec, memory, p))
        }
        None => Ok(su_bound_value(spec, memory, &SuBoundParams::standard(spec, memory))),
    }
}

/// One row of a gap evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    /// Memory `M`.
    pub memory: f64,
    /// Achievable rate.
    pub achievable: f64,
    /// Lower bound on the optimal rate.
    pub lower: f64,
    /// `achievable / lower`; infinite when only the bound vanishes, 1 when both do.
    pub ratio: f64,
    /// Provenance of the bound.
    pub origin: String,
}

fn ratio(achievable: f64, lower: f64) -> f64 {
    if lower > 0.0 {
        achievable / lower
    } else if achievable > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Gap row at one memory value.
pub fn gap_row(spec: &SystemSpec, table: Option<&IntervalTable>, memory: f64, weighting: Weighting) -> GapRow {
    match spec {
        SystemSpec::MultiUser(s) => {
            let owned;
            let table = match table {
                Some(t) => t,
                None => {
                    owned = interval_table(s);
                    &owned
                }
            };
            let achievable = multiuser_rate_with(s, table, memory).total;
            let (lower, params) = best_multiuser_lower_bound_with(s, table, memory, weighting);
            GapRow {
                memory,
                achievable,
                lower,
                ratio: ratio(achievable, lower),
                origin: format!("{}", params.origin),
            }
        }
        SystemSpec::SingleUser(s) => {
            let achievable = singleuser_rate(s, memory).total;
            let params = SuBoundParams::standard(s, memory);
            let lower = su_bound_value(s, memory, &params);
            GapRow {
                memory,
                achievable,
                lower,
                ratio: ratio(achievable, lower),
                origin: "standard".into(),
            }
        }
    }
}

/// Gap rows over a memory grid, in grid order, with exact weights.
pub fn gap(spec: &SystemSpec, grid: &[f64]) -> Vec<GapRow> {
    let table = spec.as_multi_user().map(interval_table);
    grid.iter()
        .map(|&m| gap_row(spec, table.as_ref(), m, Weighting::Exact))
        .collect()
}

/// Exact optimal rate of the two-cache, two-level example.
///
/// Two single-access users request level-1 files (two files) and one user
/// reading both caches requests one of `n2` level-2 files.
pub fn small_example_optimum(memory: f64, n2: u64) -> Result<f64, BoundError> {
    if n2 < 4 {
        return Err(BoundError::OutOfModel(n2));
    }
    let m = memory;
    let pieces = [
        3.0 - 2.0 * m,
        2.5 - m,
        2.0 - 0.5 * m,
        1.0 - (m - 2.0) / (n2 as f64 / 2.0),
    ];
    Ok(pieces.iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LevelSpec, SuLevelSpec, DEFAULT_BETA};
    use alloc::vec;

    fn one_level() -> MultiUserSpec {
        MultiUserSpec::new(4, vec![LevelSpec::new(16, 4, 1)], DEFAULT_BETA).unwrap()
    }

    #[test]
    fn tuple_examples() {
        let s = one_level();
        let p = BoundParams::new(&s, 1, 2, vec![2], BoundOrigin::UserSupplied);
        assert_eq!(p.lambda, vec![0.5]);
        assert_eq!(multiuser_lower_bound(&s, 2.0, &p).unwrap(), 1.0);
        let p = BoundParams::new(&s, 1, 2, vec![1], BoundOrigin::UserSupplied);
        assert_eq!(p.lambda, vec![1.0]);
        let p = BoundParams::new(&s, 1, 2, vec![3], BoundOrigin::UserSupplied);
        assert!(multiuser_lower_bound(&s, 2.0, &p).is_err());
        let p = BoundParams::new(&s, 1, 2, vec![2], BoundOrigin::UserSupplied).with_weighting(&s, Weighting::Exact);
        assert_eq!(p.lambda, vec![0.75]);
        assert_eq!(multiuser_lower_bound(&s, 2.0, &p).unwrap(), 2.0);
    }

    #[test]
    fn trivial_tuple_present() {
        let s = one_level();
        let c = candidate_params(&s, 3.0);
        assert!(c.iter().any(|p| p.t == 1 && p.b == 1 && p.check(&s).is_ok()));
    }

    #[test]
    fn single_user_small_memory() {
        let s = SingleUserSpec::new(
            45,
            vec![SuLevelSpec::new(500, 30), SuLevelSpec::new(1000, 15)],
            DEFAULT_BETA,
        )
        .unwrap();
        let v = singleuser_lower_bound(&s, 0.1, None).unwrap();
        assert!((v - 40.5).abs() < 1e-12);
    }

    #[test]
    fn small_example_corners() {
        let f = |m| small_example_optimum(m, 4).unwrap();
        assert_eq!(f(0.0), 3.0);
        assert_eq!(f(0.5), 2.0);
        assert_eq!(f(1.0), 1.5);
        assert_eq!(f(2.0), 1.0);
        assert_eq!(f(4.0), 0.0);
        assert!(small_example_optimum(1.0, 3).is_err());
    }
}
