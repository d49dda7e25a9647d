//! Multi-level coded caching: memory allocation across popularity levels,
//! achievable rates, lower bounds on the optimal rate, and a bit-exact
//! simulation of placement and XOR delivery.
//!
//! The crate is `no_std` and only needs an allocator. Parsing, file formats
//! and the command-line front end live in the companion `mlcache` crate.
//!
//! ```
//! use mlcache_core::model::{LevelSpec, MultiUserSpec, DEFAULT_BETA};
//! use mlcache_core::rates::multiuser_rate;
//!
//! let spec = MultiUserSpec::new(
//!     4,
//!     vec![LevelSpec::new(16, 4, 1), LevelSpec::new(64, 1, 1)],
//!     DEFAULT_BETA,
//! )
//! .unwrap();
//! let rate = multiuser_rate(&spec, 16.0);
//! assert!((rate.total - (4.0 / 7.0 + 3.875)).abs() < 1e-12);
//! ```
#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod bounds;
pub mod discretize;
pub mod model;
pub mod partition;
pub mod rates;
pub mod sim;
pub mod single_level;

/// Relative tolerance used for floating-point threshold comparisons.
pub const REL_TOL: f64 = 1e-12;
