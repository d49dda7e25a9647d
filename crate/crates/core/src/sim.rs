//! Bit-level simulation of decentralized placement and XOR delivery.
//!
//! Every file of level `i` is cut into `d_i` subfiles of `F/d_i` bits, one per
//! cache color. A cache of color `c` stores a uniformly random subset of
//! exactly `floor(q_i N_i F/d_i)` bits drawn from the color-`c` subfiles of the
//! level, where `q_i = alpha_i M d_i / N_i`. Delivery runs the subset-XOR
//! scheme separately for every level, color and group of users with disjoint
//! windows, and every user's decoding is replayed from its own caches plus
//! the transcript.
//!
//! Placement is lazy: the number of stored bits per `(cache, level, file)` is
//! drawn up front with sequential hypergeometric draws, and the bit indices of
//! a file are only drawn when a request touches it. All randomness comes from
//! one ChaCha stream per `(purpose, cache, level, file)` key, so results do not
//! depend on evaluation order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use bitvec::prelude::*;
use rand::distributions::WeightedIndex;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Hypergeometric};
use thiserror::Error;

use crate::model::{MultiUserSpec, DEFAULT_BETA, LevelSpec};
use crate::partition::{allocate, Allocation};
use crate::rates::multiuser_rate;
use crate::single_level::{coloring_plan, GeometryError};

/// Simulation failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    /// A level's degree does not divide the cache count or the file size.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// A user could not reconstruct a bit of its requested file.
    #[error("decode failure: level {level}, user {user}, bit {bit}")]
    Decode {
        /// Level of the user, in input order (zero-based).
        level: usize,
        /// User index `window_start * U + slot`.
        user: u64,
        /// Bit position inside the requested file.
        bit: u64,
    },
    /// Inconsistent arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

const TAG_COUNTS: u64 = 1;
const TAG_INDICES: u64 = 2;
const TAG_CONTENT: u64 = 3;
const TAG_DEMAND: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_key(tag: u64, a: u64, b: u64, c: u64) -> u64 {
    [a, b, c].iter().fold(splitmix(tag), |h, &x| splitmix(h ^ x))
}

fn rng_for(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Placement of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPlacement {
    /// Access degree, equal to the number of colors.
    pub degree: u64,
    /// Fraction `q_i` of each color pool stored by a cache.
    pub fraction: f64,
    /// Bits per subfile, `F / d_i`.
    pub subfile_bits: u64,
    /// Bits of this level stored by every cache.
    pub stored_per_cache: u64,
    counts: Vec<Vec<u64>>,
}

impl LevelPlacement {
    /// Stored bits of `file` in `cache`.
    pub fn count(&self, cache: u64, file: u64) -> u64 {
        self.counts[cache as usize][file as usize]
    }
}

/// Cache contents of a decentralized placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    caches: u64,
    file_bits: u64,
    seed: u64,
    budget_bits: u64,
    levels: Vec<LevelPlacement>,
}

impl Placement {
    /// Bits per file `F`.
    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    /// Seed all randomness derives from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-cache budget `floor(M F)` in bits.
    pub fn budget_bits(&self) -> u64 {
        self.budget_bits
    }

    /// Per-level placements in canonical level order.
    pub fn levels(&self) -> &[LevelPlacement] {
        &self.levels
    }

    /// Total bits stored by `cache`.
    pub fn stored_bits(&self, cache: u64) -> u64 {
        self.levels
            .iter()
            .map(|l| l.counts[cache as usize].iter().sum::<u64>())
            .sum()
    }

    /// Sorted indices, inside the subfile of the cache's color, of the bits of
    /// `file` stored by `cache`.
    pub fn stored_indices(&self, cache: u64, level: usize, file: u64) -> Vec<usize> {
        let lp = &self.levels[level];
        let count = lp.count(cache, file) as usize;
        let sub = lp.subfile_bits as usize;
        if count == sub {
            return (0..sub).collect();
        }
        let mut rng = rng_for(self.seed, stream_key(TAG_INDICES, cache, level as u64, file));
        let mut idx = index::sample(&mut rng, sub, count).into_vec();
        idx.sort_unstable();
        idx
    }

    fn stored_mask(&self, cache: u64, level: usize, file: u64) -> BitVec<u64> {
        let mut mask = bitvec![u64, Lsb0; 0; self.levels[level].subfile_bits as usize];
        for i in self.stored_indices(cache, level, file) {
            mask.set(i, true);
        }
        mask
    }
}

/// Fractions at or above `1 - SNAP` are treated as full storage.
const SNAP: f64 = 1e-12;

/// Places a random sampling of every level into every cache.
pub fn place(spec: &MultiUserSpec, allocation: &Allocation, file_bits: u64, seed: u64) -> Result<Placement, SimError> {
    let k = spec.caches();
    if file_bits == 0 {
        return Err(SimError::InvalidInput("file size must be positive".into()));
    }
    if allocation.per_level.len() != spec.len() {
        return Err(SimError::InvalidInput(format!(
            "allocation has {} levels, spec has {}",
            allocation.per_level.len(),
            spec.len()
        )));
    }
    for l in spec.levels() {
        coloring_plan(k, 1, l.degree)?;
        if file_bits % l.degree != 0 {
            return Err(GeometryError {
                degree: l.degree,
                what: "file size",
                value: file_bits,
            }
            .into());
        }
    }
    let budget_bits = libm::floor(allocation.memory.max(0.0) * file_bits as f64) as u64;
    let mut fractions = Vec::with_capacity(spec.len());
    let mut per_cache = Vec::with_capacity(spec.len());
    for (l, &mem) in spec.levels().iter().zip(&allocation.per_level) {
        let q = mem.max(0.0) * l.d() / l.n();
        assert!(q <= 1.0 + 1e-9, "allocation exceeds the full storage of a level");
        let q = if q >= 1.0 - SNAP { 1.0 } else { q };
        let pool = l.files * (file_bits / l.degree);
        fractions.push(q);
        per_cache.push(if q == 1.0 { pool } else { libm::floor(q * pool as f64) as u64 });
    }
    let mut excess = per_cache.iter().sum::<u64>().saturating_sub(budget_bits);
    for c in per_cache.iter_mut().rev() {
        let cut = excess.min(*c);
        *c -= cut;
        excess -= cut;
    }
    let mut levels = Vec::with_capacity(spec.len());
    for (i, l) in spec.levels().iter().enumerate() {
        let sub = file_bits / l.degree;
        let stored = per_cache[i];
        let counts = (0..k).map(|cache| file_counts(seed, cache, i, l, sub, stored)).collect();
        levels.push(LevelPlacement {
            degree: l.degree,
            fraction: fractions[i],
            subfile_bits: sub,
            stored_per_cache: stored,
            counts,
        });
    }
    let placement = Placement {
        caches: k,
        file_bits,
        seed,
        budget_bits,
        levels,
    };
    for cache in 0..k {
        assert!(
            placement.stored_bits(cache) <= budget_bits,
            "cache {cache} exceeds its memory budget"
        );
    }
    Ok(placement)
}

/// Splits `stored` bits of a pool of `files * sub` bits into per-file counts
/// with the law of a uniformly random subset.
fn file_counts(seed: u64, cache: u64, level: usize, l: &LevelSpec, sub: u64, stored: u64) -> Vec<u64> {
    let mut rng = rng_for(seed, stream_key(TAG_COUNTS, cache, level as u64, 0));
    let mut out = Vec::with_capacity(l.files as usize);
    split_counts(&mut rng, l.files, sub, stored, &mut out);
    out
}

/// Appends the counts of `files` consecutive files holding `marked` bits in
/// total, halving the range so that each draw sees a population no larger
/// than the range it splits.
fn split_counts(rng: &mut ChaCha8Rng, files: u64, sub: u64, marked: u64, out: &mut Vec<u64>) {
    if marked == 0 {
        out.extend(core::iter::repeat(0).take(files as usize));
        return;
    }
    if marked == files * sub {
        out.extend(core::iter::repeat(sub).take(files as usize));
        return;
    }
    if files == 1 {
        out.push(marked);
        return;
    }
    let half = files / 2;
    let first = hypergeometric(rng, files * sub, marked, half * sub);
    split_counts(rng, half, sub, first, out);
    split_counts(rng, files - half, sub, marked - first, out);
}

/// Number of marked items in a uniform sample of `sample` out of `pool` items,
/// `marked` of which are marked.
///
/// The sampler in `rand_distr` underflows on some large populations; the draw
/// is then split into two consecutive samples without replacement, which has
/// the same law.
fn hypergeometric(rng: &mut ChaCha8Rng, pool: u64, marked: u64, sample: u64) -> u64 {
    if marked == 0 || sample == 0 {
        return 0;
    }
    if marked == pool {
        return sample;
    }
    if sample == pool {
        return marked;
    }
    if 2 * marked > pool {
        return sample - hypergeometric(rng, pool, pool - marked, sample);
    }
    if 2 * sample > pool {
        return marked - hypergeometric(rng, pool, marked, pool - sample);
    }
    if sample == 1 {
        return u64::from(rng.gen_bool(marked as f64 / pool as f64));
    }
    match Hypergeometric::new(pool, marked, sample) {
        Ok(h) => h.sample(rng),
        Err(_) => {
            let first = sample / 2;
            let a = hypergeometric(rng, pool, marked, first);
            a + hypergeometric(rng, pool - first, marked - a, sample - first)
        }
    }
}

/// Per-level requested files, indexed by user `window_start * U + slot`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestVector {
    /// Requested file of every user, per level in canonical order.
    pub files: Vec<Vec<u64>>,
    /// Per level: true when there are fewer files than users, so some repeat.
    pub repeated: Vec<bool>,
}

/// All-distinct requests per level where possible, lexicographic in user index.
pub fn worst_case_requests(spec: &MultiUserSpec) -> RequestVector {
    let k = spec.caches();
    let files = spec
        .levels()
        .iter()
        .map(|l| (0..k * l.users_per_cache).map(|u| u % l.files).collect())
        .collect();
    let repeated = spec.levels().iter().map(|l| k * l.users_per_cache > l.files).collect();
    RequestVector { files, repeated }
}

/// One XOR broadcast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    /// Level, in input order (zero-based).
    pub level: usize,
    /// Cache color the subfiles belong to.
    pub color: u64,
    /// Group (or row) the users belong to.
    pub group: usize,
    /// Users served, by index.
    pub users: Vec<u64>,
    /// Payload length.
    pub bits: u64,
}

/// Transcript of a delivery and its verification.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryResult {
    /// Broadcasts in transmission order.
    pub transmissions: Vec<Transmission>,
    /// Sum of the payload lengths.
    pub total_bits: u64,
    /// Per level (input order), per user: whether decoding succeeded.
    pub decoded_ok: Vec<Vec<bool>>,
    /// `total_bits / F`.
    pub empirical_rate: f64,
}

/// Lazily generated file contents.
struct Library {
    seed: u64,
    file_bits: usize,
    files: BTreeMap<(usize, u64), BitVec<u64>>,
}

impl Library {
    fn new(seed: u64, file_bits: u64) -> Self {
        Self {
            seed,
            file_bits: file_bits as usize,
            files: BTreeMap::new(),
        }
    }

    fn file(&mut self, level: usize, file: u64) -> &BitVec<u64> {
        let (seed, len) = (self.seed, self.file_bits);
        self.files.entry((level, file)).or_insert_with(|| {
            let mut rng = rng_for(seed, stream_key(TAG_CONTENT, level as u64, file, 0));
            let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
            let mut bits = BitVec::from_vec(words);
            bits.truncate(len);
            bits
        })
    }
}

/// A user taking part in one group delivery.
#[derive(Debug, Clone, Copy)]
struct Member {
    user: u64,
    cache: u64,
    file: u64,
}

struct GroupContext<'a> {
    placement: &'a Placement,
    level: usize,
    label: usize,
    color: u64,
    group: usize,
}

fn members_of(mask: u64) -> Vec<u32> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

/// Subset-XOR delivery to users reading pairwise distinct caches of one color.
fn deliver_group(
    ctx: &GroupContext<'_>,
    library: &mut Library,
    members: &[Member],
    out: &mut Vec<Transmission>,
) -> Result<(), SimError> {
    let n = members.len();
    if n > 64 {
        return Err(SimError::InvalidInput(format!("group of {n} users exceeds 64")));
    }
    let lp = &ctx.placement.levels[ctx.level];
    let sub = lp.subfile_bits as usize;
    let offset = ctx.color as usize * sub;

    // stored[(cache, file)]: which bits of the color subfile the cache holds
    let mut stored: BTreeMap<(u64, u64), BitVec<u64>> = BTreeMap::new();
    for m in members {
        for v in members {
            stored
                .entry((v.cache, m.file))
                .or_insert_with(|| ctx.placement.stored_mask(v.cache, ctx.level, m.file));
        }
    }

    // buckets[u][T]: bits of u's subfile held by exactly the members in T (u not in T)
    let mut buckets: Vec<BTreeMap<u64, Vec<usize>>> = vec![BTreeMap::new(); n];
    for (u, m) in members.iter().enumerate() {
        let masks: Vec<&BitVec<u64>> = members.iter().map(|v| &stored[&(v.cache, m.file)]).collect();
        for bit in 0..sub {
            let mut t = 0u64;
            for (v, mask) in masks.iter().enumerate() {
                if mask[bit] {
                    t |= 1 << v;
                }
            }
            if t >> u & 1 == 0 {
                buckets[u].entry(t).or_default().push(bit);
            }
        }
    }

    let mut subsets: Vec<u64> = buckets
        .iter()
        .enumerate()
        .flat_map(|(u, b)| b.keys().map(move |&t| t | 1 << u))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    subsets.sort_by_key(|&s| (Reverse(s.count_ones()), members_of(s)));

    let empty = Vec::new();
    let needed = |u: usize, s: u64| buckets[u].get(&(s & !(1 << u))).unwrap_or(&empty);
    let mut sent: Vec<(u64, BitVec<u64>)> = Vec::new();
    for &s in &subsets {
        let users = members_of(s);
        let len = users.iter().map(|&u| needed(u as usize, s).len()).max().unwrap_or(0);
        if len == 0 {
            continue;
        }
        let mut payload = bitvec![u64, Lsb0; 0; len];
        for &u in &users {
            let content = library.file(ctx.label, members[u as usize].file);
            for (k, &bit) in needed(u as usize, s).iter().enumerate() {
                let v = payload[k] ^ content[offset + bit];
                payload.set(k, v);
            }
        }
        out.push(Transmission {
            level: ctx.label,
            color: ctx.color,
            group: ctx.group,
            users: users.iter().map(|&u| members[u as usize].user).collect(),
            bits: len as u64,
        });
        sent.push((s, payload));
    }

    for (u, m) in members.iter().enumerate() {
        let fail = |bit: usize| SimError::Decode {
            level: ctx.label,
            user: m.user,
            bit: (offset + bit) as u64,
        };
        let own = &stored[&(m.cache, m.file)];
        let mut recon = bitvec![u64, Lsb0; 0; sub];
        let mut covered = own.clone();
        {
            let content = library.file(ctx.label, m.file);
            for bit in own.iter_ones() {
                recon.set(bit, content[offset + bit]);
            }
        }
        for (s, payload) in sent.iter().filter(|(s, _)| s >> u & 1 == 1) {
            let mut buf = payload.clone();
            for w in members_of(*s).into_iter().map(|w| w as usize).filter(|&w| w != u) {
                let side = &stored[&(m.cache, members[w].file)];
                let content = library.file(ctx.label, members[w].file);
                for (k, &bit) in needed(w, *s).iter().enumerate() {
                    if !side[bit] {
                        return Err(fail(bit));
                    }
                    let v = buf[k] ^ content[offset + bit];
                    buf.set(k, v);
                }
            }
            for (k, &bit) in needed(u, *s).iter().enumerate() {
                recon.set(bit, buf[k]);
                covered.set(bit, true);
            }
        }
        let content = library.file(ctx.label, m.file);
        if let Some(bit) = (0..sub).find(|&b| !covered[b] || recon[b] != content[offset + b]) {
            return Err(fail(bit));
        }
    }
    Ok(())
}

fn finish(spec: &MultiUserSpec, placement: &Placement, transmissions: Vec<Transmission>) -> DeliveryResult {
    let total_bits = transmissions.iter().map(|t| t.bits).sum();
    let mut decoded_ok = vec![Vec::new(); spec.len()];
    for (canon, l) in spec.levels().iter().enumerate() {
        decoded_ok[spec.original_index()[canon]] = vec![true; (spec.caches() * l.users_per_cache) as usize];
    }
    DeliveryResult {
        transmissions,
        total_bits,
        decoded_ok,
        empirical_rate: total_bits as f64 / placement.file_bits as f64,
    }
}

/// Delivers `requests` with the coloring construction and verifies every user's decoding.
pub fn deliver(spec: &MultiUserSpec, placement: &Placement, requests: &RequestVector) -> Result<DeliveryResult, SimError> {
    if requests.files.len() != spec.len() || placement.levels.len() != spec.len() || placement.caches != spec.caches() {
        return Err(SimError::InvalidInput("placement, requests and spec disagree".into()));
    }
    let k = spec.caches();
    let mut library = Library::new(placement.seed, placement.file_bits);
    let mut transmissions = Vec::new();
    for (i, l) in spec.levels().iter().enumerate() {
        let files = &requests.files[i];
        if files.len() as u64 != k * l.users_per_cache || files.iter().any(|&f| f >= l.files) {
            return Err(SimError::InvalidInput(format!("bad requests for level {}", i + 1)));
        }
        let plan = coloring_plan(k, l.users_per_cache, l.degree)?;
        for color in 0..l.degree {
            for (g, group) in plan.groups().iter().enumerate() {
                let members: Vec<Member> = group
                    .iter()
                    .map(|&slot| {
                        let user = slot.window_start * l.users_per_cache + slot.slot;
                        Member {
                            user,
                            cache: plan.cache_of_color(slot, color),
                            file: files[user as usize],
                        }
                    })
                    .collect();
                let caches: BTreeSet<u64> = members.iter().map(|m| m.cache).collect();
                if caches.len() != members.len() || members.iter().any(|m| plan.cache_color(m.cache) != color) {
                    return Err(SimError::InvalidInput("coloring invariant violated".into()));
                }
                let ctx = GroupContext {
                    placement,
                    level: i,
                    label: spec.original_index()[i],
                    color,
                    group: g,
                };
                deliver_group(&ctx, &mut library, &members, &mut transmissions)?;
            }
        }
    }
    Ok(finish(spec, placement, transmissions))
}

/// Aggregate of repeated simulation trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Rate predicted by the closed form.
    pub analytic_rate: f64,
    /// Mean empirical rate over decoded trials.
    pub empirical_mean: f64,
    /// Largest empirical rate over decoded trials.
    pub empirical_max: f64,
    /// Trials whose delivery failed to decode.
    pub decode_failures: u64,
    /// Number of trials.
    pub trials: u64,
    /// First trial seed.
    pub seed: u64,
}

/// One worst-case trial: place with `seed`, deliver the worst-case requests, return the rate.
pub fn simulate_trial(spec: &MultiUserSpec, allocation: &Allocation, file_bits: u64, seed: u64) -> Result<f64, SimError> {
    let placement = place(spec, allocation, file_bits, seed)?;
    let requests = worst_case_requests(spec);
    Ok(deliver(spec, &placement, &requests)?.empirical_rate)
}

/// Folds per-trial outcomes into a report; decode failures are counted, other errors returned.
pub fn summarize(analytic_rate: f64, seed: u64, outcomes: &[Result<f64, SimError>]) -> Result<SimReport, SimError> {
    let mut rates = Vec::with_capacity(outcomes.len());
    let mut decode_failures = 0;
    for o in outcomes {
        match o {
            Ok(r) => rates.push(*r),
            Err(SimError::Decode { .. }) => decode_failures += 1,
            Err(e) => return Err(e.clone()),
        }
    }
    let mean = if rates.is_empty() {
        0.0
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    };
    Ok(SimReport {
        analytic_rate,
        empirical_mean: mean,
        empirical_max: rates.iter().copied().fold(0.0, f64::max),
        decode_failures,
        trials: outcomes.len() as u64,
        seed,
    })
}

/// Worst-case simulation over `trials` seeds `seed, seed + 1, ...`.
pub fn simulate(spec: &MultiUserSpec, memory: f64, file_bits: u64, seed: u64, trials: u64) -> Result<SimReport, SimError> {
    if trials == 0 {
        return Err(SimError::InvalidInput("at least one trial is needed".into()));
    }
    let allocation = allocate(spec, memory);
    let analytic = multiuser_rate(spec, memory).total;
    let outcomes: Vec<Result<f64, SimError>> = (0..trials)
        .map(|t| simulate_trial(spec, &allocation, file_bits, seed.wrapping_add(t)))
        .collect();
    summarize(analytic, seed, &outcomes)
}

/// Cumulative weights: `out[r]` is the total weight of ranks below `r`.
pub fn prefix_mass(weights: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for w in weights {
        acc += w;
        out.push(acc);
    }
    out
}

/// Nonempty rank segments cut at `cuts` and the degree-1 levels they induce.
///
/// Each cache is credited `U = max(1, round(users / K))` users, split across
/// levels as `max(1, round(U * mass_i))` with the remainder going to the most
/// popular level.
pub fn induced_levels(cum: &[f64], cuts: &[usize], caches: u64, users: u64) -> (Vec<(usize, usize)>, Vec<LevelSpec>) {
    let n = cum.len() - 1;
    let total = cum[n];
    let mut segments = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for &c in cuts.iter().chain(core::iter::once(&n)) {
        if c > prev {
            segments.push((prev, c));
        }
        prev = prev.max(c);
    }
    let per_cache = libm::round(users as f64 / caches as f64).max(1.0) as u64;
    let mut u: Vec<u64> = segments
        .iter()
        .map(|&(a, b)| libm::round(per_cache as f64 * (cum[b] - cum[a]) / total).max(1.0) as u64)
        .collect();
    let rest: u64 = u[1..].iter().sum();
    u[0] = per_cache.saturating_sub(rest).max(1);
    let levels = segments
        .iter()
        .zip(&u)
        .map(|(&(a, b), &ui)| LevelSpec::new((b - a) as u64, ui, 1))
        .collect();
    (segments, levels)
}

/// Symmetric-profile instance induced by cutting a popularity list into levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticModel {
    /// Popularity weights, most popular first.
    pub weights: Vec<f64>,
    /// Level of every file, by rank.
    pub level_of: Vec<usize>,
    /// Instance used for placement and for the theoretical rate.
    pub spec: MultiUserSpec,
    /// Total number of users.
    pub users: u64,
}

impl StochasticModel {
    /// Builds the model from sorted weights and `L - 1` cut ranks.
    ///
    /// Level `i` holds ranks `cuts[i-1] .. cuts[i]`; empty levels are dropped.
    /// User counts follow [`induced_levels`].
    pub fn new(weights: &[f64], cuts: &[usize], caches: u64, users: u64) -> Result<Self, SimError> {
        let n = weights.len();
        if n == 0 || caches == 0 || users == 0 {
            return Err(SimError::InvalidInput("empty popularity, caches or users".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(SimError::InvalidInput("weights must be positive".into()));
        }
        if weights.windows(2).any(|w| w[0] < w[1]) {
            return Err(SimError::InvalidInput("weights must be sorted descending".into()));
        }
        if cuts.windows(2).any(|w| w[0] > w[1]) || cuts.iter().any(|&c| c > n) {
            return Err(SimError::InvalidInput("cuts must be nondecreasing ranks".into()));
        }
        let cum = prefix_mass(weights);
        let (segments, levels) = induced_levels(&cum, cuts, caches, users);
        let mut level_of = vec![0; n];
        for (i, &(a, b)) in segments.iter().enumerate() {
            level_of[a..b].iter_mut().for_each(|x| *x = i);
        }
        let spec = MultiUserSpec::new(caches, levels, DEFAULT_BETA)
            .map_err(|e| SimError::InvalidInput(format!("{e}")))?;
        // canonical order may permute levels; map segment index to canonical index
        let mut canon = vec![0; segments.len()];
        for (c, &orig) in spec.original_index().iter().enumerate() {
            canon[orig] = c;
        }
        level_of.iter_mut().for_each(|x| *x = canon[*x]);
        Ok(Self {
            weights: weights.to_vec(),
            level_of,
            spec,
            users,
        })
    }

    /// First rank of every level, by segment.
    fn first_rank(&self) -> Vec<u64> {
        let mut first = vec![u64::MAX; self.spec.len()];
        for (rank, &l) in self.level_of.iter().enumerate() {
            first[l] = first[l].min(rank as u64);
        }
        first
    }
}

/// One stochastic trial: users pick a cache uniformly and a file by popularity;
/// each level's users are served in rows holding at most one user per cache.
pub fn stochastic_trial(model: &StochasticModel, allocation: &Allocation, file_bits: u64, seed: u64) -> Result<f64, SimError> {
    let spec = &model.spec;
    let placement = place(spec, allocation, file_bits, seed)?;
    let mut rng = rng_for(seed, stream_key(TAG_DEMAND, 0, 0, 0));
    let pick = WeightedIndex::new(&model.weights).map_err(|e| SimError::InvalidInput(format!("{e}")))?;
    let first = model.first_rank();
    // per level, per cache: requested files (in-level index) in user order
    let mut queues = vec![vec![Vec::new(); spec.caches() as usize]; spec.len()];
    for _ in 0..model.users {
        let cache = rng.gen_range(0..spec.caches());
        let rank = pick.sample(&mut rng);
        let level = model.level_of[rank];
        queues[level][cache as usize].push(rank as u64 - first[level]);
    }
    let mut library = Library::new(placement.seed, placement.file_bits);
    let mut transmissions = Vec::new();
    let mut user = 0u64;
    for (level, per_cache) in queues.iter().enumerate() {
        let rows = per_cache.iter().map(Vec::len).max().unwrap_or(0);
        for row in 0..rows {
            let members: Vec<Member> = per_cache
                .iter()
                .enumerate()
                .filter_map(|(cache, q)| {
                    q.get(row).map(|&file| {
                        user += 1;
                        Member {
                            user: user - 1,
                            cache: cache as u64,
                            file,
                        }
                    })
                })
                .collect();
            let ctx = GroupContext {
                placement: &placement,
                level,
                label: spec.original_index()[level],
                color: 0,
                group: row,
            };
            deliver_group(&ctx, &mut library, &members, &mut transmissions)?;
        }
    }
    let total: u64 = transmissions.iter().map(|t| t.bits).sum();
    Ok(total as f64 / file_bits as f64)
}

/// Stochastic-demand simulation over `trials` seeds; the analytic rate is the
/// symmetric-profile rate of the induced instance.
pub fn simulate_stochastic(
    model: &StochasticModel,
    memory: f64,
    file_bits: u64,
    seed: u64,
    trials: u64,
) -> Result<SimReport, SimError> {
    if trials == 0 {
        return Err(SimError::InvalidInput("at least one trial is needed".into()));
    }
    let allocation = allocate(&model.spec, memory);
    let analytic = multiuser_rate(&model.spec, memory).total;
    let outcomes: Vec<Result<f64, SimError>> = (0..trials)
        .map(|t| stochastic_trial(model, &allocation, file_bits, seed.wrapping_add(t)))
        .collect();
    summarize(analytic, seed, &outcomes)
}

/// Corner points of the two-cache, two-level example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// `M = 0`, rate 3.
    M0,
    /// `M = 1/2`, rate 2, coded cache contents.
    Mhalf,
    /// `M = 1`, rate 3/2.
    M1,
    /// `M = 2`, rate 1.
    M2,
    /// `M = 2 + N_2/2`, rate 0.
    Mfull,
}

impl Corner {
    /// All corners by increasing memory.
    pub const ALL: [Corner; 5] = [Corner::M0, Corner::Mhalf, Corner::M1, Corner::M2, Corner::Mfull];

    /// Cache memory of the corner.
    pub fn memory(self, n2: u64) -> f64 {
        match self {
            Corner::M0 => 0.0,
            Corner::Mhalf => 0.5,
            Corner::M1 => 1.0,
            Corner::M2 => 2.0,
            Corner::Mfull => 2.0 + n2 as f64 / 2.0,
        }
    }

    /// Broadcast size of the corner scheme, in files.
    pub fn rate(self) -> f64 {
        match self {
            Corner::M0 => 3.0,
            Corner::Mhalf => 2.0,
            Corner::M1 => 1.5,
            Corner::M2 => 1.0,
            Corner::Mfull => 0.0,
        }
    }

    /// Corner with the given memory, if any.
    pub fn at_memory(memory: f64, n2: u64) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.memory(n2) == memory)
    }
}

/// Cache contents of a corner scheme of the two-cache example.
///
/// Users 1 and 2 read caches 1 and 2 and request one of the two level-1
/// files; user 3 reads both caches and requests one of `n2` level-2 files.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallExampleScheme {
    corner: Corner,
    n2: u64,
    file_bits: usize,
    popular: [BitVec<u64>; 2],
    unpopular: Vec<BitVec<u64>>,
    caches: [BitVec<u64>; 2],
}

/// Outcome of checking a corner scheme on every request vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallExampleReport {
    /// Corner checked.
    pub corner: Corner,
    /// Cache memory of the corner.
    pub memory: f64,
    /// Bits stored in each cache.
    pub cache_bits: [u64; 2],
    /// Number of request vectors served.
    pub requests: u64,
    /// Largest broadcast over all request vectors.
    pub max_broadcast_bits: u64,
    /// Smallest broadcast over all request vectors.
    pub min_broadcast_bits: u64,
    /// `max_broadcast_bits / F`.
    pub rate: f64,
}

fn xor(a: &BitSlice<u64>, b: &BitSlice<u64>) -> BitVec<u64> {
    let mut out = a.to_bitvec();
    out ^= b;
    out
}

/// Builds the cache contents of `corner` for `n2` level-2 files of `file_bits` bits.
pub fn small_example_scheme(corner: Corner, n2: u64, file_bits: u64) -> Result<SmallExampleScheme, SimError> {
    if n2 < 4 {
        return Err(SimError::InvalidInput(format!("n2 = {n2} but the example needs n2 >= 4")));
    }
    if file_bits == 0 || file_bits % 2 != 0 {
        return Err(SimError::InvalidInput("file size must be positive and even".into()));
    }
    let mut lib = Library::new(0, file_bits);
    let popular = [lib.file(0, 0).clone(), lib.file(0, 1).clone()];
    let unpopular: Vec<BitVec<u64>> = (0..n2).map(|f| lib.file(1, f).clone()).collect();
    let h = file_bits as usize / 2;
    let (a, b) = (|w: &BitVec<u64>| w[..h].to_bitvec(), |w: &BitVec<u64>| w[h..].to_bitvec());
    let caches = match corner {
        Corner::M0 => [BitVec::new(), BitVec::new()],
        Corner::Mhalf => [
            xor(&popular[0][..h], &popular[1][..h]),
            xor(&popular[0][h..], &popular[1][h..]),
        ],
        Corner::M1 => {
            let mut z1 = a(&popular[0]);
            z1.extend_from_bitslice(&popular[1][..h]);
            let mut z2 = b(&popular[0]);
            z2.extend_from_bitslice(&popular[1][h..]);
            [z1, z2]
        }
        Corner::M2 | Corner::Mfull => {
            let mut z1 = popular[0].clone();
            z1.extend_from_bitslice(&popular[1]);
            let mut z2 = z1.clone();
            if corner == Corner::Mfull {
                for w in &unpopular {
                    z1.extend_from_bitslice(&w[..h]);
                    z2.extend_from_bitslice(&w[h..]);
                }
            }
            [z1, z2]
        }
    };
    Ok(SmallExampleScheme {
        corner,
        n2,
        file_bits: file_bits as usize,
        popular,
        unpopular,
        caches,
    })
}

impl SmallExampleScheme {
    /// Bits stored by each cache.
    pub fn cache_bits(&self) -> [u64; 2] {
        [self.caches[0].len() as u64, self.caches[1].len() as u64]
    }

    /// Serves requests `(r1, r2, r3)`, checks every user's decoding, and returns the broadcast size in bits.
    pub fn serve(&self, r: [u64; 3]) -> Result<u64, SimError> {
        let [r1, r2, r3] = r;
        if r1 > 1 || r2 > 1 || r3 >= self.n2 {
            return Err(SimError::InvalidInput(format!("request {r:?} out of range")));
        }
        let f = self.file_bits;
        let h = f / 2;
        let w1 = |n: u64| &self.popular[n as usize];
        let w2 = &self.unpopular[r3 as usize];
        let [z1, z2] = &self.caches;
        // broadcast parts and each user's reconstruction, using only its caches and the broadcast
        let (x, d1, d2, d3): (BitVec<u64>, BitVec<u64>, BitVec<u64>, BitVec<u64>) = match self.corner {
            Corner::M0 => {
                let mut x = w1(r1).clone();
                x.extend_from_bitslice(w1(r2));
                x.extend_from_bitslice(w2);
                let (d1, d2, d3) = (x[..f].to_bitvec(), x[f..2 * f].to_bitvec(), x[2 * f..].to_bitvec());
                (x, d1, d2, d3)
            }
            Corner::Mhalf => {
                let mut x = w2.clone();
                x.extend_from_bitslice(&w1(r1)[h..]);
                x.extend_from_bitslice(&w1(r2)[..h]);
                let (x3, x1b, x2a) = (&x[..f], &x[f..f + h], &x[f + h..]);
                let mut d1 = if r1 == r2 { x2a.to_bitvec() } else { xor(z1, x2a) };
                d1.extend_from_bitslice(x1b);
                let mut d2 = x2a.to_bitvec();
                d2.extend_from_bitslice(&if r1 == r2 { x1b.to_bitvec() } else { xor(z2, x1b) });
                let d3 = x3.to_bitvec();
                (x, d1, d2, d3)
            }
            Corner::M1 => {
                let mut x = w2.clone();
                x.extend_from_bitslice(&xor(&w1(r1)[h..], &w1(r2)[..h]));
                let (x3, x12) = (&x[..f], &x[f..]);
                let part = |z: &BitVec<u64>, n: u64| z[n as usize * h..(n as usize + 1) * h].to_bitvec();
                let mut d1 = part(z1, r1);
                d1.extend_from_bitslice(&xor(x12, &part(z1, r2)));
                let mut d2 = xor(x12, &part(z2, r1));
                d2.extend_from_bitslice(&part(z2, r2));
                (x.clone(), d1, d2, x3.to_bitvec())
            }
            Corner::M2 => {
                let x = w2.clone();
                let d1 = z1[r1 as usize * f..(r1 as usize + 1) * f].to_bitvec();
                let d2 = z2[r2 as usize * f..(r2 as usize + 1) * f].to_bitvec();
                (x.clone(), d1, d2, x)
            }
            Corner::Mfull => {
                let d1 = z1[r1 as usize * f..(r1 as usize + 1) * f].to_bitvec();
                let d2 = z2[r2 as usize * f..(r2 as usize + 1) * f].to_bitvec();
                let base = 2 * f + r3 as usize * h;
                let mut d3 = z1[base..base + h].to_bitvec();
                d3.extend_from_bitslice(&z2[base..base + h]);
                (BitVec::new(), d1, d2, d3)
            }
        };
        for (user, (got, want)) in [(&d1, w1(r1)), (&d2, w1(r2)), (&d3, w2)].into_iter().enumerate() {
            if got != want {
                let bit = (0..f).find(|&i| got.get(i).map(|b| *b) != Some(want[i])).unwrap_or(0);
                return Err(SimError::Decode {
                    level: usize::from(user == 2),
                    user: user as u64,
                    bit: bit as u64,
                });
            }
        }
        Ok(x.len() as u64)
    }

    /// Serves every request vector and reports the broadcast sizes.
    pub fn verify_all(&self) -> Result<SmallExampleReport, SimError> {
        let mut max_bits = 0;
        let mut min_bits = u64::MAX;
        let mut count = 0;
        for r1 in 0..2 {
            for r2 in 0..2 {
                for r3 in 0..self.n2 {
                    let bits = self.serve([r1, r2, r3])?;
                    max_bits = max_bits.max(bits);
                    min_bits = min_bits.min(bits);
                    count += 1;
                }
            }
        }
        let memory = self.corner.memory(self.n2);
        let cache_bits = self.cache_bits();
        let cap = memory * self.file_bits as f64;
        if cache_bits.iter().any(|&b| b as f64 > cap) {
            return Err(SimError::InvalidInput("cache contents exceed the memory".into()));
        }
        Ok(SmallExampleReport {
            corner: self.corner,
            memory,
            cache_bits,
            requests: count,
            max_broadcast_bits: max_bits,
            min_broadcast_bits: min_bits,
            rate: max_bits as f64 / self.file_bits as f64,
        })
    }
}
