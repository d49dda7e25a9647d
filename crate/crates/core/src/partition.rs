//! Feasible partitions, the interval table, per-level memory allocation and
//! the refined partition.
//!
//! Levels fall into three classes for a given memory `M`: `H` levels receive
//! no memory, `I` levels share memory in proportion to `sqrt(N_i U_i)`, and
//! `J` levels are stored in full. The interval table lists the memory values
//! at which levels change class, so that the partition for any `M` is a
//! binary search away.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::model::MultiUserSpec;
use crate::REL_TOL;

/// Class of a level within a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Class {
    /// No memory.
    H,
    /// Partial memory.
    I,
    /// Full storage.
    J,
}

/// An assignment of every level to `H`, `I` or `J`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    classes: Vec<Class>,
}

impl Partition {
    /// Builds a partition from per-level classes (canonical order).
    pub fn from_classes(classes: Vec<Class>) -> Self {
        Self { classes }
    }

    /// Per-level classes.
    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    /// Class of level `i`.
    pub fn class(&self, i: usize) -> Class {
        self.classes[i]
    }

    /// Levels of the given class in increasing index order.
    pub fn members(&self, class: Class) -> Vec<usize> {
        (0..self.classes.len()).filter(|&i| self.classes[i] == class).collect()
    }

    /// Levels without memory.
    pub fn h(&self) -> Vec<usize> {
        self.members(Class::H)
    }

    /// Levels with partial memory.
    pub fn i(&self) -> Vec<usize> {
        self.members(Class::I)
    }

    /// Levels stored in full.
    pub fn j(&self) -> Vec<usize> {
        self.members(Class::J)
    }
}

/// Sums `S_A = sum sqrt(N U)`, `T_A = sum N/d` and `V_A = sum N/K` over a level set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregates {
    /// `S_I`.
    pub s_i: f64,
    /// `T_J`.
    pub t_j: f64,
    /// `V_I`.
    pub v_i: f64,
}

impl Aggregates {
    /// Aggregates of a partition.
    pub fn of(spec: &MultiUserSpec, partition: &Partition) -> Self {
        let k = spec.k();
        let mut agg = Aggregates::default();
        for (level, class) in spec.levels().iter().zip(partition.classes()) {
            match class {
                Class::H => {}
                Class::I => {
                    agg.s_i += level.sqrt_nu();
                    agg.v_i += level.n() / k;
                }
                Class::J => agg.t_j += level.full_storage(),
            }
        }
        agg
    }

    /// `M~ = (M - T_J + V_I) / S_I`, defined only when `S_I > 0`.
    pub fn mtilde(&self, memory: f64) -> Option<f64> {
        (self.s_i > 0.0).then(|| (memory - self.t_j + self.v_i) / self.s_i)
    }
}

/// `S_A` for an arbitrary level subset.
pub fn sum_sqrt_nu(spec: &MultiUserSpec, set: &[usize]) -> f64 {
    set.iter().map(|&i| spec.levels()[i].sqrt_nu()).sum()
}

/// Kind of a class-change threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ThresholdKind {
    /// `m~_i = (1/K) sqrt(N_i/U_i)`: level moves from `H` to `I`.
    Lower,
    /// `M~_i = (1/d_i + 1/K) sqrt(N_i/U_i)`: level moves from `I` to `J`.
    Upper,
}

/// One of the `2L` class-change points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Value `x_t` on the `M~` scale.
    pub value: f64,
    /// Which promotion happens here.
    pub kind: ThresholdKind,
    /// Level being promoted (canonical index).
    pub level: usize,
}

/// Memory breakpoints and the partition valid on each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTable {
    thresholds: Vec<Threshold>,
    boundaries: Vec<f64>,
    partitions: Vec<Partition>,
}

impl IntervalTable {
    /// Sorted thresholds `x_1..x_{2L}`.
    pub fn thresholds(&self) -> &[Threshold] {
        &self.thresholds
    }

    /// Memory boundaries `Y_1..Y_{2L}`; interval `t` is `[Y_t, Y_{t+1})`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Partition valid on each interval.
    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Index of the interval containing `memory`.
    pub fn interval_index(&self, memory: f64) -> usize {
        let idx = self.boundaries.partition_point(|&y| y <= memory);
        idx.saturating_sub(1)
    }
}

/// Builds the interval table by sweeping the sorted thresholds.
pub fn interval_table(spec: &MultiUserSpec) -> IntervalTable {
    let k = spec.k();
    let mut thresholds = Vec::with_capacity(2 * spec.len());
    for (level, l) in spec.levels().iter().enumerate() {
        let root = l.sqrt_n_over_u();
        thresholds.push(Threshold {
            value: root / k,
            kind: ThresholdKind::Lower,
            level,
        });
        thresholds.push(Threshold {
            value: (1.0 / l.d() + 1.0 / k) * root,
            kind: ThresholdKind::Upper,
            level,
        });
    }
    thresholds.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.kind.cmp(&b.kind))
            .then(a.level.cmp(&b.level))
    });

    let mut classes = alloc::vec![Class::H; spec.len()];
    let mut boundaries = Vec::with_capacity(thresholds.len());
    let mut partitions = Vec::with_capacity(thresholds.len());
    let mut last = 0.0f64;
    for th in &thresholds {
        classes[th.level] = match th.kind {
            ThresholdKind::Lower => Class::I,
            ThresholdKind::Upper => Class::J,
        };
        let partition = Partition::from_classes(classes.clone());
        let agg = Aggregates::of(spec, &partition);
        let y = th.value * agg.s_i + agg.t_j - agg.v_i;
        // rounding can undercut the previous boundary by an ulp; keep the table monotone
        last = if boundaries.is_empty() { y } else { y.max(last) };
        boundaries.push(last);
        partitions.push(partition);
    }
    IntervalTable {
        thresholds,
        boundaries,
        partitions,
    }
}

/// Partition valid at `memory` according to the table.
pub fn partition_at(table: &IntervalTable, memory: f64) -> &Partition {
    &table.partitions[table.interval_index(memory)]
}

/// Result of checking one level against the feasibility inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCheck {
    /// Whether the level's inequality holds (within tolerance).
    pub ok: bool,
    /// Distance to the violated side, in memory units; nonnegative when `ok`.
    pub slack: f64,
}

/// Outcome of a feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// All inequalities hold.
    pub feasible: bool,
    /// Per-level outcome (canonical order).
    pub levels: Vec<LevelCheck>,
    /// `M~` if `I` is nonempty.
    pub mtilde: Option<f64>,
    /// Reason for infeasibility when it is not per-level.
    pub note: Option<String>,
}

/// Checks whether `partition` is feasible at `memory`.
///
/// For nonempty `I`, each level's threshold is translated to the memory value
/// `x S_I + T_J - V_I` at which `M~` would equal it and compared with `memory`
/// at a tolerance proportional to the magnitudes involved. With `I` empty the
/// partition is feasible only at or beyond full storage with every level in `J`.
pub fn check_m_feasible(spec: &MultiUserSpec, memory: f64, partition: &Partition) -> FeasibilityReport {
    let agg = Aggregates::of(spec, partition);
    let k = spec.k();
    let full = spec.full_storage();
    let Some(mtilde) = agg.mtilde(memory) else {
        let all_j = partition.classes().iter().all(|&c| c == Class::J);
        let enough = memory >= full * (1.0 - REL_TOL);
        let feasible = all_j && enough;
        let levels = partition
            .classes()
            .iter()
            .map(|&c| LevelCheck {
                ok: c == Class::J && enough,
                slack: memory - full,
            })
            .collect();
        let note = (!feasible).then(|| {
            format!("I is empty at memory {memory} below full storage {full} or with levels outside J")
        });
        return FeasibilityReport {
            feasible,
            levels,
            mtilde: None,
            note,
        };
    };

    let to_memory = |x: f64| x * agg.s_i + agg.t_j - agg.v_i;
    let tol = |x: f64| REL_TOL * (memory.abs() + (x * agg.s_i).abs() + agg.t_j + agg.v_i).max(1.0);
    let mut levels = Vec::with_capacity(spec.len());
    for (l, &class) in spec.levels().iter().zip(partition.classes()) {
        let root = l.sqrt_n_over_u();
        let lower = root / k;
        let upper = (1.0 / l.d() + 1.0 / k) * root;
        let check = match class {
            Class::H => {
                let slack = to_memory(lower) - memory;
                LevelCheck {
                    ok: slack > -tol(lower),
                    slack,
                }
            }
            Class::I => {
                let below = memory - to_memory(lower);
                let above = to_memory(upper) - memory;
                LevelCheck {
                    ok: below >= -tol(lower) && above >= -tol(upper),
                    slack: below.min(above),
                }
            }
            Class::J => {
                let slack = memory - to_memory(upper);
                LevelCheck {
                    ok: slack > -tol(upper),
                    slack,
                }
            }
        };
        levels.push(check);
    }
    FeasibilityReport {
        feasible: levels.iter().all(|c| c.ok),
        levels,
        mtilde: Some(mtilde),
        note: None,
    }
}

/// Refinement of the `I` class by memory regime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedPartition {
    /// Levels without memory.
    pub h: Vec<usize>,
    /// `I` levels with `M~ < (2/K) sqrt(N/U)`.
    pub i0: Vec<usize>,
    /// `I` levels in neither `I0` nor `I1`.
    pub iprime: Vec<usize>,
    /// `I` levels with `M~ > (beta/d + 1/K) sqrt(N/U)`.
    pub i1: Vec<usize>,
    /// Levels stored in full.
    pub j: Vec<usize>,
    /// Set when `|I1| > 1`, which the separation condition rules out.
    pub warning: Option<String>,
}

/// Memory assigned to each level at a given `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Total memory `M`.
    pub memory: f64,
    /// Absolute memory `alpha_i M` per level (canonical order).
    pub per_level: Vec<f64>,
    /// Partition the allocation came from.
    pub partition: Partition,
    /// `M~`, when `I` is nonempty and `M` is below full storage.
    pub mtilde: Option<f64>,
    /// Refinement of `I`.
    pub refined: RefinedPartition,
}

fn refine_with(spec: &MultiUserSpec, partition: &Partition, mtilde: Option<f64>) -> RefinedPartition {
    let k = spec.k();
    let beta = spec.beta().value();
    let mut refined = RefinedPartition {
        h: partition.h(),
        i0: Vec::new(),
        iprime: Vec::new(),
        i1: Vec::new(),
        j: partition.j(),
        warning: None,
    };
    if let Some(mt) = mtilde {
        for i in partition.i() {
            let l = &spec.levels()[i];
            let root = l.sqrt_n_over_u();
            let in0 = mt < 2.0 / k * root;
            let in1 = mt > (beta / l.d() + 1.0 / k) * root;
            if in0 {
                refined.i0.push(i);
            }
            if in1 {
                refined.i1.push(i);
            }
            if !in0 && !in1 {
                refined.iprime.push(i);
            }
        }
    }
    if refined.i1.len() > 1 {
        refined.warning = Some(format!(
            "I1 holds {} levels; the separation condition does not hold for this instance",
            refined.i1.len()
        ));
    }
    refined
}

/// Computes the memory allocation for `memory` using a prebuilt table.
pub fn allocate_with(spec: &MultiUserSpec, table: &IntervalTable, memory: f64) -> Allocation {
    let memory = memory.max(0.0);
    let full = spec.full_storage();
    let levels = spec.levels();
    if memory >= full {
        let partition = Partition::from_classes(alloc::vec![Class::J; levels.len()]);
        let refined = refine_with(spec, &partition, None);
        return Allocation {
            memory,
            per_level: levels.iter().map(|l| l.full_storage()).collect(),
            partition,
            mtilde: None,
            refined,
        };
    }
    let partition = partition_at(table, memory).clone();
    let agg = Aggregates::of(spec, &partition);
    let mtilde = agg.mtilde(memory);
    let k = spec.k();
    let per_level = levels
        .iter()
        .zip(partition.classes())
        .map(|(l, class)| match class {
            Class::H => 0.0,
            Class::I => {
                let m = mtilde.map_or(0.0, |mt| l.sqrt_nu() * mt - l.n() / k);
                m.clamp(0.0, l.full_storage())
            }
            Class::J => l.full_storage(),
        })
        .collect();
    let refined = refine_with(spec, &partition, mtilde);
    Allocation {
        memory,
        per_level,
        partition,
        mtilde,
        refined,
    }
}

/// Computes the memory allocation for `memory`.
pub fn allocate(spec: &MultiUserSpec, memory: f64) -> Allocation {
    allocate_with(spec, &interval_table(spec), memory)
}

/// Refined partition at `memory`.
pub fn refine(spec: &MultiUserSpec, memory: f64) -> RefinedPartition {
    allocate(spec, memory).refined
}
