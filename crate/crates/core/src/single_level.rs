//! Closed-form single-level rates and the multi-access coloring construction.

use alloc::vec::Vec;

use thiserror::Error;

/// The requested geometry has no coloring construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unsupported geometry: degree {degree} does not divide {what} {value}")]
pub struct GeometryError {
    /// Access degree of the level.
    pub degree: u64,
    /// Which quantity failed the divisibility check.
    pub what: &'static str,
    /// The value that is not a multiple of the degree.
    pub value: u64,
}

/// Rate of the decentralized scheme with one user per cache.
///
/// Evaluates `min{N/M, K} (1 - M/N)`, taking `min{N/0, K} = K` and returning
/// zero once every cache can hold the whole library.
pub fn basic_rate(memory: f64, caches: u64, files: u64) -> f64 {
    let k = caches as f64;
    let n = files as f64;
    if memory <= 0.0 {
        return k;
    }
    if memory >= n {
        return 0.0;
    }
    let r = (n / memory).min(k) * (1.0 - memory / n);
    r.clamp(0.0, k)
}

/// Rate of one level with `U` users per cache, each reading `d` consecutive caches.
///
/// Evaluates `U min{N/M, K} (1 - dM/N)`, clamped at zero for `M >= N/d`.
pub fn single_level_rate(memory: f64, caches: u64, files: u64, users_per_cache: u64, degree: u64) -> f64 {
    let k = caches as f64;
    let n = files as f64;
    let u = users_per_cache as f64;
    let d = degree as f64;
    if memory <= 0.0 {
        return k * u;
    }
    let tail = 1.0 - d * memory / n;
    if tail <= 0.0 {
        return 0.0;
    }
    u * (n / memory).min(k) * tail
}

/// Rate of the centralized scheme for one level with `U` users per cache and `d = 1`.
///
/// The centralized scheme caches every subset of `t` caches once, giving rate
/// `K (1 - t/K) min{1/(1+t), N/K}` at memory `tN/K`. Intermediate memory values
/// use the lower convex envelope of those corner points (memory sharing).
pub fn centralized_rate(memory: f64, caches: u64, files: u64, users_per_cache: u64) -> f64 {
    let k = caches as f64;
    let n = files as f64;
    let u = users_per_cache as f64;
    if memory >= n {
        return 0.0;
    }
    let memory = memory.max(0.0);
    let corners: Vec<(f64, f64)> = (0..=caches)
        .map(|t| {
            let t = t as f64;
            let m = t * n / k;
            let r = k * (1.0 - t / k) * (1.0 / (1.0 + t)).min(n / k);
            (m, r)
        })
        .collect();
    let hull = lower_hull(&corners);
    for w in hull.windows(2) {
        let (m0, r0) = w[0];
        let (m1, r1) = w[1];
        if memory <= m1 {
            let frac = if m1 > m0 { (memory - m0) / (m1 - m0) } else { 0.0 };
            return u * (r0 + frac * (r1 - r0));
        }
    }
    0.0
}

/// Lower convex hull of points sorted by abscissa.
fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// A user of a multi-access level, identified by where its window starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct UserSlot {
    /// First cache of the user's window of `d` consecutive caches.
    pub window_start: u64,
    /// Which of the `U` users attached to that window start.
    pub slot: u64,
}

/// Cyclic coloring of the caches and the grouping of users into disjoint-window groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringPlan {
    caches: u64,
    colors: u64,
    groups: Vec<Vec<UserSlot>>,
}

impl ColoringPlan {
    /// Number of colors `d`.
    pub fn colors(&self) -> u64 {
        self.colors
    }

    /// Number of caches `K`.
    pub fn caches(&self) -> u64 {
        self.caches
    }

    /// Color of cache `k`.
    pub fn cache_color(&self, cache: u64) -> u64 {
        cache % self.colors
    }

    /// The `dU` groups of `K/d` users each.
    pub fn groups(&self) -> &[Vec<UserSlot>] {
        &self.groups
    }

    /// Caches read by a user, in window order.
    pub fn window(&self, user: UserSlot) -> impl Iterator<Item = u64> + '_ {
        (0..self.colors).map(move |o| (user.window_start + o) % self.caches)
    }

    /// The unique cache of color `color` inside the user's window.
    pub fn cache_of_color(&self, user: UserSlot, color: u64) -> u64 {
        let offset = (color + self.colors - user.window_start % self.colors) % self.colors;
        (user.window_start + offset) % self.caches
    }
}

/// Builds the coloring construction for `K` caches, `U` users per cache and degree `d`.
///
/// Cache `k` gets color `k mod d`. Users whose windows start at caches with the
/// same residue modulo `d` and share a slot form one group; their windows tile
/// the caches, so no two of them read a common cache.
pub fn coloring_plan(caches: u64, users_per_cache: u64, degree: u64) -> Result<ColoringPlan, GeometryError> {
    if degree == 0 || caches % degree != 0 {
        return Err(GeometryError {
            degree,
            what: "cache count",
            value: caches,
        });
    }
    let mut groups = Vec::with_capacity((degree * users_per_cache) as usize);
    for offset in 0..degree {
        for slot in 0..users_per_cache {
            let group = (0..caches / degree)
                .map(|j| UserSlot {
                    window_start: offset + j * degree,
                    slot,
                })
                .collect();
            groups.push(group);
        }
    }
    Ok(ColoringPlan {
        caches,
        colors: degree,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_rate_examples() {
        assert_eq!(basic_rate(0.0, 4, 16), 4.0);
        assert_eq!(basic_rate(16.0, 4, 16), 0.0);
        assert!((basic_rate(2.0, 4, 8) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_level_examples() {
        assert_eq!(single_level_rate(0.0, 5, 30, 3, 2), 15.0);
        assert_eq!(single_level_rate(8.0, 4, 16, 3, 2), 0.0);
        assert!((single_level_rate(14.0, 4, 16, 4, 1) - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn centralized_corners() {
        // t = 1 corner of K = 4, N = 16: memory 4, rate 4 * 3/4 / 2 = 1.5
        assert!((centralized_rate(4.0, 4, 16, 1) - 1.5).abs() < 1e-12);
        assert_eq!(centralized_rate(0.0, 4, 16, 2), 8.0);
        assert_eq!(centralized_rate(16.0, 4, 16, 2), 0.0);
    }

    #[test]
    fn coloring_examples() {
        let p = coloring_plan(4, 3, 2).unwrap();
        assert_eq!(p.colors(), 2);
        assert_eq!(p.groups().len(), 6);
        assert!(p.groups().iter().all(|g| g.len() == 2));
        let p = coloring_plan(6, 1, 3).unwrap();
        assert_eq!(p.groups().len(), 3);
        assert!(p.groups().iter().all(|g| g.len() == 2));
        assert!(coloring_plan(5, 1, 2).is_err());
    }
}
