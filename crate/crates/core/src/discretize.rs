//! Splitting a popularity distribution into levels, and choosing access
//! degrees under cost constraints.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{MultiUserSpec, Ratio, DEFAULT_BETA};
use crate::rates::multiuser_rate;
use crate::sim::{induced_levels, prefix_mass, StochasticModel};

/// Search failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscretizeError {
    /// More levels requested than the candidate lattice can separate.
    #[error("{levels} levels need at least {needed} cut candidates, lattice has {lattice}")]
    LatticeTooSmall {
        /// Requested levels.
        levels: usize,
        /// Cut candidates required.
        needed: usize,
        /// Cut candidates available.
        lattice: usize,
    },
    /// No degree tuple satisfies the constraints.
    #[error("no degree tuple satisfies d_max = {d_max} and average <= {d_avg}")]
    Infeasible {
        /// Largest degree allowed.
        d_max: u64,
        /// Largest user-weighted average degree allowed.
        d_avg: Ratio,
    },
    /// Inconsistent arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Default number of cut candidates.
pub const DEFAULT_LATTICE: usize = 200;

/// A split of the files into levels and the rate it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSplit {
    /// `L - 1` cut ranks; level `i` holds ranks `cuts[i-1] .. cuts[i]`.
    pub boundaries: Vec<usize>,
    /// Instance induced by the split.
    pub model: StochasticModel,
    /// Achievable rate of the induced instance at the evaluation memory.
    pub objective: f64,
}

/// Candidate cut ranks: for `j = 1..=lattice`, the first rank whose cumulative
/// mass reaches `j / (lattice + 1)`, deduplicated and kept inside `1..n`.
pub fn cut_candidates(weights: &[f64], lattice: usize) -> Vec<usize> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(lattice);
    let mut cum = 0.0;
    let mut rank = 0;
    for j in 1..=lattice {
        let target = j as f64 / (lattice + 1) as f64 * total;
        while rank < n && cum < target {
            cum += weights[rank];
            rank += 1;
        }
        if rank >= 1 && rank < n && out.last() != Some(&rank) {
            out.push(rank);
        }
    }
    out
}

/// Visits every nondecreasing (or strictly increasing) choice of `k` indices below `m`.
fn for_each_choice(m: usize, k: usize, strict: bool, mut visit: impl FnMut(&[usize])) {
    if k == 0 {
        visit(&[]);
        return;
    }
    if m == 0 || (strict && k > m) {
        return;
    }
    let mut idx: Vec<usize> = if strict { (0..k).collect() } else { vec![0; k] };
    loop {
        visit(&idx);
        // advance the rightmost index that can still move
        let mut pos = k;
        while pos > 0 {
            let p = pos - 1;
            let limit = if strict { m - (k - p) } else { m - 1 };
            if idx[p] < limit {
                idx[p] += 1;
                for q in p + 1..k {
                    idx[q] = if strict { idx[q - 1] + 1 } else { idx[q - 1] };
                }
                break;
            }
            pos = p;
        }
        if pos == 0 {
            return;
        }
    }
}

/// Searches the cut lattice for the split into `levels` levels with the lowest
/// achievable rate at `memory`, all levels using degree 1.
///
/// With `allow_empty`, cuts may coincide or sit at either end, so levels may be
/// empty; the optimum is then nonincreasing in `levels`. Ties keep the first
/// split in lexicographic order of the cuts.
pub fn split_levels(
    weights: &[f64],
    levels: usize,
    caches: u64,
    memory: f64,
    total_users: u64,
    allow_empty: bool,
    lattice: usize,
) -> Result<LevelSplit, DiscretizeError> {
    if levels == 0 {
        return Err(DiscretizeError::InvalidInput("at least one level is needed".into()));
    }
    let mut cands = cut_candidates(weights, lattice);
    if allow_empty {
        cands.insert(0, 0);
        cands.push(weights.len());
    }
    let k = levels - 1;
    if !allow_empty && k > cands.len() {
        return Err(DiscretizeError::LatticeTooSmall {
            levels,
            needed: k,
            lattice: cands.len(),
        });
    }
    // validates the inputs once; the loop below only builds the level lists
    StochasticModel::new(weights, &[], caches, total_users).map_err(|e| DiscretizeError::InvalidInput(format!("{e}")))?;
    let cum = prefix_mass(weights);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cuts = vec![0; k];
    let mut failure = None;
    for_each_choice(cands.len(), k, !allow_empty, |choice| {
        if failure.is_some() {
            return;
        }
        for (c, &i) in cuts.iter_mut().zip(choice) {
            *c = cands[i];
        }
        let (_, levels) = induced_levels(&cum, &cuts, caches, total_users);
        match MultiUserSpec::new(caches, levels, DEFAULT_BETA) {
            Ok(spec) => {
                let v = multiuser_rate(&spec, memory).total;
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, cuts.clone()));
                }
            }
            Err(e) => failure = Some(DiscretizeError::InvalidInput(format!("{e}"))),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, boundaries) = best.ok_or_else(|| DiscretizeError::InvalidInput("no split evaluated".into()))?;
    let (objective, model) = evaluate_split(weights, &boundaries, caches, memory, total_users)?;
    Ok(LevelSplit {
        boundaries,
        model,
        objective,
    })
}

/// Achievable rate and induced model of one split.
pub fn evaluate_split(
    weights: &[f64],
    cuts: &[usize],
    caches: u64,
    memory: f64,
    total_users: u64,
) -> Result<(f64, StochasticModel), DiscretizeError> {
    let model = StochasticModel::new(weights, cuts, caches, total_users)
        .map_err(|e| DiscretizeError::InvalidInput(format!("{e}")))?;
    let rate = multiuser_rate(&model.spec, memory).total;
    Ok((rate, model))
}

/// Best degree tuple and its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessPlan {
    /// Degrees in the caller's level order.
    pub degrees: Vec<u64>,
    /// Achievable rate with those degrees.
    pub rate: f64,
}

/// True when every `d_i <= d_max` and `sum U_i d_i <= d_avg * sum U_i`.
pub fn access_feasible(users: &[u64], degrees: &[u64], d_max: u64, d_avg: Ratio) -> bool {
    let weighted: u128 = users.iter().zip(degrees).map(|(&u, &d)| u as u128 * d as u128).sum();
    let total: u128 = users.iter().map(|&u| u as u128).sum();
    degrees.iter().all(|&d| d >= 1 && d <= d_max) && weighted * d_avg.den() as u128 <= d_avg.num() as u128 * total
}

/// Exhaustive search for the degrees minimizing the achievable rate at `memory`.
///
/// Degrees range over `1..=min(d_max, K)`; ties go to the lexicographically
/// smaller tuple in the caller's level order.
pub fn optimize_access(spec: &MultiUserSpec, memory: f64, d_max: u64, d_avg: Ratio) -> Result<AccessPlan, DiscretizeError> {
    if d_max == 0 {
        return Err(DiscretizeError::InvalidInput("d_max must be at least 1".into()));
    }
    let input = spec.levels_in_input_order();
    let users: Vec<u64> = input.iter().map(|l| l.users_per_cache).collect();
    let top = d_max.min(spec.caches());
    let l = input.len();
    let mut best: Option<AccessPlan> = None;
    let mut tuple = vec![1u64; l];
    loop {
        if access_feasible(&users, &tuple, d_max, d_avg) {
            let canon: Vec<u64> = spec.original_index().iter().map(|&o| tuple[o]).collect();
            let candidate = spec
                .with_degrees(&canon)
                .map_err(|e| DiscretizeError::InvalidInput(format!("{e}")))?;
            let rate = multiuser_rate(&candidate, memory).total;
            if best.as_ref().is_none_or(|b| rate < b.rate) {
                best = Some(AccessPlan {
                    degrees: tuple.clone(),
                    rate,
                });
            }
        }
        // odometer over tuples in lexicographic order
        let mut p = l;
        while p > 0 && tuple[p - 1] == top {
            tuple[p - 1] = 1;
            p -= 1;
        }
        if p == 0 {
            break;
        }
        tuple[p - 1] += 1;
    }
    best.ok_or(DiscretizeError::Infeasible { d_max, d_avg })
}
