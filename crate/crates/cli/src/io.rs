//! File formats: spec JSON, popularity CSV, memory grids and number rendering.

use std::fs;
use std::path::Path;

use mlcache_core::model::{LevelSpec, ModelError, MultiUserSpec, Ratio, SingleUserSpec, SuLevelSpec, SystemSpec, DEFAULT_BETA};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One multi-user level as written in a spec file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiUserLevelDoc {
    /// `N_i`.
    pub files: u64,
    /// `U_i`.
    pub users_per_cache: u64,
    /// `d_i`.
    pub degree: u64,
}

/// One single-user level as written in a spec file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleUserLevelDoc {
    /// `N_i`.
    pub files: u64,
    /// `K_i`.
    pub users: u64,
}

/// Spec file contents, before canonicalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "setup", deny_unknown_fields)]
pub enum SpecDoc {
    /// Multi-user instance.
    #[serde(rename = "multi-user")]
    MultiUser {
        /// `K`.
        caches: u64,
        /// Level-separation factor as `"a/b"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<String>,
        /// Levels in the order supplied.
        levels: Vec<MultiUserLevelDoc>,
    },
    /// Single-user instance.
    #[serde(rename = "single-user")]
    SingleUser {
        /// `K`.
        caches: u64,
        /// Level-separation factor as `"a/b"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<String>,
        /// Levels in the order supplied.
        levels: Vec<SingleUserLevelDoc>,
    },
}

impl SpecDoc {
    /// Builds the canonical instance.
    pub fn build(&self) -> Result<SystemSpec, ModelError> {
        let beta = |b: &Option<String>| b.as_deref().map(Ratio::parse).transpose().map(|r| r.unwrap_or(DEFAULT_BETA));
        match self {
            SpecDoc::MultiUser { caches, beta: b, levels } => {
                let levels = levels
                    .iter()
                    .map(|l| LevelSpec::new(l.files, l.users_per_cache, l.degree))
                    .collect();
                Ok(SystemSpec::MultiUser(MultiUserSpec::new(*caches, levels, beta(b)?)?))
            }
            SpecDoc::SingleUser { caches, beta: b, levels } => {
                let levels = levels.iter().map(|l| SuLevelSpec::new(l.files, l.users)).collect();
                Ok(SystemSpec::SingleUser(SingleUserSpec::new(*caches, levels, beta(b)?)?))
            }
        }
    }

    /// Document of an instance, levels in the order originally supplied.
    pub fn of(spec: &SystemSpec) -> Self {
        let beta = spec.beta();
        let beta = (beta != DEFAULT_BETA).then(|| beta.to_string());
        match spec {
            SystemSpec::MultiUser(s) => SpecDoc::MultiUser {
                caches: s.caches(),
                beta,
                levels: s
                    .levels_in_input_order()
                    .iter()
                    .map(|l| MultiUserLevelDoc {
                        files: l.files,
                        users_per_cache: l.users_per_cache,
                        degree: l.degree,
                    })
                    .collect(),
            },
            SystemSpec::SingleUser(s) => SpecDoc::SingleUser {
                caches: s.caches(),
                beta,
                levels: s
                    .levels_in_input_order()
                    .iter()
                    .map(|l| SingleUserLevelDoc {
                        files: l.files,
                        users: l.users,
                    })
                    .collect(),
            },
        }
    }
}

/// Parses and canonicalizes a spec document.
pub fn parse_spec(text: &str) -> Result<SystemSpec, CliError> {
    let doc: SpecDoc = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("spec: {e}")))?;
    doc.build().map_err(|e| CliError::Model(format!("spec: {e}")))
}

/// Renders an instance as a spec document.
pub fn spec_to_json(spec: &SystemSpec) -> String {
    serde_json::to_string_pretty(&SpecDoc::of(spec)).expect("spec documents always serialize")
}

/// Reads a file, mapping failures to usage errors that name the path.
pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Reads and parses a spec file.
pub fn load_spec(path: &Path) -> Result<SystemSpec, CliError> {
    parse_spec(&read_file(path)?)
}

#[derive(Debug, Deserialize, Serialize)]
struct PopularityRow {
    rank: u64,
    weight: f64,
}

/// Parses a popularity CSV (`rank,weight`) into weights ordered by rank.
///
/// Ranks must be exactly `1..=n`; weights must be positive and nonincreasing in rank.
pub fn parse_popularity(text: &str) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for row in reader.deserialize::<PopularityRow>() {
        rows.push(row.map_err(|e| CliError::Usage(format!("popularity: {e}")))?);
    }
    if rows.is_empty() {
        return Err(CliError::Usage("popularity: no rows".into()));
    }
    rows.sort_by_key(|r| r.rank);
    for (i, r) in rows.iter().enumerate() {
        if r.rank != i as u64 + 1 {
            return Err(CliError::Usage(format!(
                "popularity: ranks must be 1..={} without gaps or repeats",
                rows.len()
            )));
        }
        if !(r.weight.is_finite() && r.weight > 0.0) {
            return Err(CliError::Usage(format!("popularity: rank {} has nonpositive weight", r.rank)));
        }
    }
    if rows.windows(2).any(|w| w[0].weight < w[1].weight) {
        return Err(CliError::Usage("popularity: weights must be nonincreasing in rank".into()));
    }
    Ok(rows.into_iter().map(|r| r.weight).collect())
}

/// Renders weights as a popularity CSV.
pub fn popularity_to_csv(weights: &[f64]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, &weight) in weights.iter().enumerate() {
        w.serialize(PopularityRow {
            rank: i as u64 + 1,
            weight,
        })
        .expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

/// Parses `start:stop:step` into grid points.
///
/// Points are `start, start + step, ...` strictly below `stop - step/2`,
/// followed by `stop` itself; a single value is a one-point grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("grid {text:?}: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("expected numbers"));
    match parts.as_slice() {
        [single] => {
            let v = num(single)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad("memory must be finite and nonnegative"));
            }
            Ok(vec![v])
        }
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(start.is_finite() && stop.is_finite() && step.is_finite()) || start < 0.0 {
                return Err(bad("values must be finite and start nonnegative"));
            }
            if step <= 0.0 {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("stop is below start"));
            }
            let mut out = Vec::new();
            let mut k = 0u64;
            loop {
                let v = start + k as f64 * step;
                if v >= stop - step / 2.0 {
                    break;
                }
                out.push(v);
                k += 1;
                if out.len() > 10_000_000 {
                    return Err(bad("more than 10^7 points"));
                }
            }
            out.push(stop);
            Ok(out)
        }
        _ => Err(bad("expected start:stop:step")),
    }
}

/// Renders a float with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific rendering parses back");
    let plain = rounded.to_string();
    if plain.len() > 16 {
        format!("{rounded:e}")
    } else {
        plain
    }
}

/// Renders an optional float with 6 significant digits, empty when absent.
pub fn sig6_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Joins 1-based level labels with hyphens.
pub fn join_levels(labels: &[usize]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-")
}
