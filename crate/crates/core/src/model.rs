//! Problem-instance data model and regularity validation.
//!
//! A [`SystemSpec`] is either a multi-user instance (every cache serves a
//! fixed number of users of each level) or a single-user instance (one user
//! per cache, only per-level totals known). Levels are kept in canonical
//! order: popularity `U_i/N_i` (or `K_i/N_i`) nonincreasing, ties broken by
//! the order in which the caller supplied them. The original position of each
//! level is retained for output labeling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

/// Errors raised while building a [`SystemSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    /// The level list is empty.
    #[error("levels: at least one level is required")]
    NoLevels,
    /// A count that must be positive is zero.
    #[error("{field}: must be a positive integer")]
    NonPositive {
        /// Dotted path of the offending field, e.g. `levels[1].files`.
        field: String,
    },
    /// A level's access degree exceeds the number of caches.
    #[error("levels[{level}].degree: degree {degree} exceeds cache count {caches}")]
    DegreeExceedsCaches {
        /// Index of the level as supplied by the caller.
        level: usize,
        /// The offending degree.
        degree: u64,
        /// Cache count of the instance.
        caches: u64,
    },
    /// Single-user per-level user counts do not add up to the cache count.
    #[error("levels[*].users: user counts sum to {sum}, expected cache count {caches}")]
    UserSumMismatch {
        /// Sum of the per-level user counts.
        sum: u64,
        /// Cache count of the instance.
        caches: u64,
    },
    /// The level-separation factor is not a positive rational.
    #[error("beta: {0}")]
    InvalidBeta(String),
}

/// A positive rational number `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    /// Builds `num/den`; both parts must be positive.
    pub fn new(num: u64, den: u64) -> Result<Self, ModelError> {
        if num == 0 || den == 0 {
            return Err(ModelError::InvalidBeta(format!(
                "{num}/{den} is not a positive rational"
            )));
        }
        Ok(Self { num, den })
    }

    /// Parses `"a/b"` or a bare integer `"a"`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let text = text.trim();
        let bad = || ModelError::InvalidBeta(format!("cannot parse {text:?} as a rational"));
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (
                n.trim().parse::<u64>().map_err(|_| bad())?,
                d.trim().parse::<u64>().map_err(|_| bad())?,
            ),
            None => (text.parse::<u64>().map_err(|_| bad())?, 1),
        };
        Self::new(num, den)
    }

    /// Numerator.
    pub fn num(self) -> u64 {
        self.num
    }

    /// Denominator.
    pub fn den(self) -> u64 {
        self.den
    }

    /// Value as a float.
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Default level-separation factor `1/198`.
pub const DEFAULT_BETA: Ratio = Ratio { num: 1, den: 198 };

/// One popularity level of a multi-user instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSpec {
    /// Number of files `N_i`.
    pub files: u64,
    /// Users of this level attached to each cache, `U_i`.
    pub users_per_cache: u64,
    /// Number of consecutive caches each user reads, `d_i`.
    pub degree: u64,
}

impl LevelSpec {
    /// Convenience constructor.
    pub fn new(files: u64, users_per_cache: u64, degree: u64) -> Self {
        Self {
            files,
            users_per_cache,
            degree,
        }
    }

    /// `N_i` as a float.
    pub fn n(&self) -> f64 {
        self.files as f64
    }

    /// `U_i` as a float.
    pub fn u(&self) -> f64 {
        self.users_per_cache as f64
    }

    /// `d_i` as a float.
    pub fn d(&self) -> f64 {
        self.degree as f64
    }

    /// `sqrt(N_i U_i)`.
    pub fn sqrt_nu(&self) -> f64 {
        libm::sqrt(self.n() * self.u())
    }

    /// `sqrt(N_i / U_i)`.
    pub fn sqrt_n_over_u(&self) -> f64 {
        libm::sqrt(self.n() / self.u())
    }

    /// Memory needed to store the level fully in every window of `d_i` caches.
    pub fn full_storage(&self) -> f64 {
        self.n() / self.d()
    }
}

/// One popularity level of a single-user instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuLevelSpec {
    /// Number of files `N_i`.
    pub files: u64,
    /// Number of users of this level across all caches, `K_i`.
    pub users: u64,
}

impl SuLevelSpec {
    /// Convenience constructor.
    pub fn new(files: u64, users: u64) -> Self {
        Self { files, users }
    }
}

/// Multi-user instance in canonical level order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiUserSpec {
    caches: u64,
    levels: Vec<LevelSpec>,
    beta: Ratio,
    original: Vec<usize>,
}

/// Single-user instance in canonical level order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleUserSpec {
    caches: u64,
    levels: Vec<SuLevelSpec>,
    beta: Ratio,
    original: Vec<usize>,
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemSpec {
    /// Every cache serves `U_i` users of every level.
    MultiUser(MultiUserSpec),
    /// One user per cache, `K_i` users of level `i` overall.
    SingleUser(SingleUserSpec),
}

/// Stable permutation sorting items by popularity `weight/files` descending.
fn popularity_order(pairs: &[(u64, u64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, na) = pairs[a];
        let (wb, nb) = pairs[b];
        // wa/na > wb/nb  <=>  wa*nb > wb*na
        let lhs = wa as u128 * nb as u128;
        let rhs = wb as u128 * na as u128;
        match rhs.cmp(&lhs) {
            Ordering::Equal => a.cmp(&b),
            other => other,
        }
    });
    order
}

fn positive(value: u64, field: impl FnOnce() -> String) -> Result<(), ModelError> {
    if value == 0 {
        Err(ModelError::NonPositive { field: field() })
    } else {
        Ok(())
    }
}

impl MultiUserSpec {
    /// Validates the raw fields and returns the canonical instance.
    pub fn new(caches: u64, levels: Vec<LevelSpec>, beta: Ratio) -> Result<Self, ModelError> {
        positive(caches, || "caches".into())?;
        if levels.is_empty() {
            return Err(ModelError::NoLevels);
        }
        for (idx, level) in levels.iter().enumerate() {
            positive(level.files, || format!("levels[{idx}].files"))?;
            positive(level.users_per_cache, || format!("levels[{idx}].users_per_cache"))?;
            positive(level.degree, || format!("levels[{idx}].degree"))?;
            if level.degree > caches {
                return Err(ModelError::DegreeExceedsCaches {
                    level: idx,
                    degree: level.degree,
                    caches,
                });
            }
        }
        let pairs: Vec<(u64, u64)> = levels.iter().map(|l| (l.users_per_cache, l.files)).collect();
        let original = popularity_order(&pairs);
        let levels = original.iter().map(|&i| levels[i]).collect();
        Ok(Self {
            caches,
            levels,
            beta,
            original,
        })
    }

    /// Cache count `K`.
    pub fn caches(&self) -> u64 {
        self.caches
    }

    /// `K` as a float.
    pub fn k(&self) -> f64 {
        self.caches as f64
    }

    /// Levels in canonical order.
    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    /// Number of levels `L`.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    /// Always false for a validated spec.
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level-separation factor.
    pub fn beta(&self) -> Ratio {
        self.beta
    }

    /// Maximum access degree `D`.
    pub fn max_degree(&self) -> u64 {
        self.levels.iter().map(|l| l.degree).max().unwrap_or(1)
    }

    /// Position of each canonical level in the caller's input.
    pub fn original_index(&self) -> &[usize] {
        &self.original
    }

    /// Levels in the caller's original order.
    pub fn levels_in_input_order(&self) -> Vec<LevelSpec> {
        let mut out = self.levels.clone();
        for (canon, &orig) in self.original.iter().enumerate() {
            out[orig] = self.levels[canon];
        }
        out
    }

    /// Full-storage memory `sum_i N_i/d_i`.
    pub fn full_storage(&self) -> f64 {
        self.levels.iter().map(LevelSpec::full_storage).sum()
    }

    /// Same instance with the access degrees replaced (canonical order kept).
    pub fn with_degrees(&self, degrees: &[u64]) -> Result<Self, ModelError> {
        let mut levels = self.levels_in_input_order();
        for (canon, &orig) in self.original.iter().enumerate() {
            levels[orig].degree = degrees[canon];
        }
        Self::new(self.caches, levels, self.beta)
    }
}

impl SingleUserSpec {
    /// Validates the raw fields and returns the canonical instance.
    pub fn new(caches: u64, levels: Vec<SuLevelSpec>, beta: Ratio) -> Result<Self, ModelError> {
        positive(caches, || "caches".into())?;
        if levels.is_empty() {
            return Err(ModelError::NoLevels);
        }
        for (idx, level) in levels.iter().enumerate() {
            positive(level.files, || format!("levels[{idx}].files"))?;
            positive(level.users, || format!("levels[{idx}].users"))?;
        }
        let sum: u64 = levels.iter().map(|l| l.users).sum();
        if sum != caches {
            return Err(ModelError::UserSumMismatch { sum, caches });
        }
        let pairs: Vec<(u64, u64)> = levels.iter().map(|l| (l.users, l.files)).collect();
        let original = popularity_order(&pairs);
        let levels = original.iter().map(|&i| levels[i]).collect();
        Ok(Self {
            caches,
            levels,
            beta,
            original,
        })
    }

    /// Cache count `K`.
    pub fn caches(&self) -> u64 {
        self.caches
    }

    /// Levels in canonical order.
    pub fn levels(&self) -> &[SuLevelSpec] {
        &self.levels
    }

    /// Number of levels `L`.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    /// Always false for a validated spec.
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level-separation factor.
    pub fn beta(&self) -> Ratio {
        self.beta
    }

    /// Position of each canonical level in the caller's input.
    pub fn original_index(&self) -> &[usize] {
        &self.original
    }

    /// Levels in the caller's original order.
    pub fn levels_in_input_order(&self) -> Vec<SuLevelSpec> {
        let mut out = self.levels.clone();
        for (canon, &orig) in self.original.iter().enumerate() {
            out[orig] = self.levels[canon];
        }
        out
    }
}

impl SystemSpec {
    /// Cache count `K`.
    pub fn caches(&self) -> u64 {
        match self {
            SystemSpec::MultiUser(s) => s.caches(),
            SystemSpec::SingleUser(s) => s.caches(),
        }
    }

    /// Number of levels `L`.
    pub fn level_count(&self) -> usize {
        match self {
            SystemSpec::MultiUser(s) => s.len(),
            SystemSpec::SingleUser(s) => s.len(),
        }
    }

    /// Level-separation factor.
    pub fn beta(&self) -> Ratio {
        match self {
            SystemSpec::MultiUser(s) => s.beta(),
            SystemSpec::SingleUser(s) => s.beta(),
        }
    }

    /// Maximum access degree `D` (1 for single-user instances).
    pub fn max_degree(&self) -> u64 {
        match self {
            SystemSpec::MultiUser(s) => s.max_degree(),
            SystemSpec::SingleUser(_) => 1,
        }
    }

    /// Position of each canonical level in the caller's input.
    pub fn original_index(&self) -> &[usize] {
        match self {
            SystemSpec::MultiUser(s) => s.original_index(),
            SystemSpec::SingleUser(s) => s.original_index(),
        }
    }

    /// The multi-user view, if any.
    pub fn as_multi_user(&self) -> Option<&MultiUserSpec> {
        match self {
            SystemSpec::MultiUser(s) => Some(s),
            SystemSpec::SingleUser(_) => None,
        }
    }

    /// The single-user view, if any.
    pub fn as_single_user(&self) -> Option<&SingleUserSpec> {
        match self {
            SystemSpec::SingleUser(s) => Some(s),
            SystemSpec::MultiUser(_) => None,
        }
    }
}

/// Outcome of the regularity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `N_i >= K U_i` for every level (multi-user) or `N_i >= K_i` (single-user).
    pub files_vs_users: bool,
    /// Every adjacent popularity ratio is at least `D/beta` (always true for single-user).
    pub separation: bool,
    /// `sqrt((U_i/N_i)/(U_{i+1}/N_{i+1}))` for each adjacent canonical pair.
    pub ratios: Vec<f64>,
    /// The separation factor used.
    pub beta: Ratio,
    /// Human-readable descriptions of every violated condition.
    pub warnings: Vec<String>,
}

impl ValidationReport {
    /// Both regularity conditions hold, so the constant-gap guarantees apply.
    pub fn regular(&self) -> bool {
        self.files_vs_users && self.separation
    }
}

/// Checks the regularity conditions. Violations become warnings.
pub fn validate(spec: &SystemSpec) -> ValidationReport {
    let mut warnings = Vec::new();
    let beta = spec.beta();
    match spec {
        SystemSpec::MultiUser(s) => {
            let k = s.caches();
            let mut files_vs_users = true;
            for (i, l) in s.levels().iter().enumerate() {
                let need = k as u128 * l.users_per_cache as u128;
                if (l.files as u128) < need {
                    files_vs_users = false;
                    warnings.push(format!(
                        "level {}: files {} < caches*users_per_cache {}",
                        s.original_index()[i] + 1,
                        l.files,
                        need
                    ));
                }
            }
            let threshold = s.max_degree() as f64 / beta.value();
            let mut ratios = Vec::new();
            let mut separation = true;
            for w in s.levels().windows(2) {
                let r = libm::sqrt((w[0].u() / w[0].n()) / (w[1].u() / w[1].n()));
                ratios.push(r);
                if r < threshold * (1.0 - crate::REL_TOL) {
                    separation = false;
                }
            }
            if !separation {
                warnings.push(format!(
                    "separation: some adjacent popularity ratio is below D/beta = {threshold} (beta = {beta})"
                ));
            }
            ValidationReport {
                files_vs_users,
                separation,
                ratios,
                beta,
                warnings,
            }
        }
        SystemSpec::SingleUser(s) => {
            let mut files_vs_users = true;
            for (i, l) in s.levels().iter().enumerate() {
                if l.files < l.users {
                    files_vs_users = false;
                    warnings.push(format!(
                        "level {}: files {} < users {}",
                        s.original_index()[i] + 1,
                        l.files,
                        l.users
                    ));
                }
            }
            ValidationReport {
                files_vs_users,
                separation: true,
                ratios: Vec::new(),
                beta,
                warnings,
            }
        }
    }
}
