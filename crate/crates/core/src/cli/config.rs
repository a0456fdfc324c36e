//! Experiment config files.
//!
//! The format is flat `key = value` text. Global keys come first; each
//! `[task]` line opens a new task block. `#` starts a comment.
//!
//! ```text
//! master_seed = 42
//! workers = auto
//! ci_level = 0.95
//!
//! [task]
//! id = agrawal-s50
//! kind = falsify
//! bound = agrawal
//! S = 50
//! n = 1e4
//! delta = 0.1, 0.05, 0.01
//! trials = 10000
//! ```
//!
//! List-valued keys (`S`, `n`, `delta`, `threshold`/`grid`) accept comma
//! separated values or an inclusive range `start:stop:count`; a task expands
//! into one result row per combination.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundFamily;
use crate::error::{Error, Result};
use crate::montecarlo::{Family, DEFAULT_BAND_ALPHA, DEFAULT_CI_LEVEL, MIN_FALSIFY_TRIALS};

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_D: f64 = 1.0;
/// Per-row trial ceiling; every trial value is held in memory.
pub const MAX_TRIALS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Tail,
    Quantiles,
    Falsify,
    AsymptoticMean,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Tail => "tail",
            TaskKind::Quantiles => "quantiles",
            TaskKind::Falsify => "falsify",
            TaskKind::AsymptoticMean => "asymptotic-mean",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tail" => Ok(TaskKind::Tail),
            "quantiles" => Ok(TaskKind::Quantiles),
            "falsify" => Ok(TaskKind::Falsify),
            "asymptotic-mean" => Ok(TaskKind::AsymptoticMean),
            other => Err(Error::Validation(format!(
                "unknown task kind '{other}' (expected tail, quantiles, falsify or asymptotic-mean)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workers {
    Auto,
    Fixed(usize),
}

impl Workers {
    pub fn count(self) -> Option<usize> {
        match self {
            Workers::Auto => None,
            Workers::Fixed(n) => Some(n),
        }
    }
}

impl FromStr for Workers {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Workers::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Workers::Fixed(n)),
            _ => Err(Error::Validation(format!("expected a positive integer or 'auto', got '{s}'"))),
        }
    }
}

/// One validated task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub id: String,
    pub kind: TaskKind,
    /// `None` selects the limit law `Z_S` (no `n`).
    pub family: Option<Family>,
    pub bound: Option<BoundFamily>,
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    pub n: Vec<u64>,
    pub delta: Vec<f64>,
    pub threshold: Vec<f64>,
    pub trials: u64,
    #[serde(rename = "D")]
    pub d: f64,
    pub seed: u64,
    pub exact: bool,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub workers: Workers,
    pub ci_level: f64,
    pub band_alpha: f64,
    pub tasks: Vec<TaskConfig>,
}

/// `key = value` pairs of one block before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawBlock {
    pub entries: Vec<(String, String)>,
}

impl RawBlock {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Splits config text into the global block and task blocks.
pub fn tokenize(text: &str) -> Result<(RawBlock, Vec<RawBlock>)> {
    let mut global = RawBlock::default();
    let mut tasks: Vec<RawBlock> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line == "[task]" {
                tasks.push(RawBlock::default());
                continue;
            }
            return Err(Error::Syntax { line: line_no, message: format!("unknown section '{line}' (only [task] is allowed)") });
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Syntax { line: line_no, message: format!("expected 'key = value', got '{line}'") });
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Syntax { line: line_no, message: format!("invalid key '{key}'") });
        }
        let block = tasks.last_mut().unwrap_or(&mut global);
        if block.entries.iter().any(|(k, _)| k == key) {
            return Err(Error::Syntax { line: line_no, message: format!("duplicate key '{key}'") });
        }
        block.set(key, value.trim());
    }
    Ok((global, tasks))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let (global, tasks) = tokenize(text)?;
    build_config(&global, &tasks)
}

/// Validates raw blocks, reporting every invalid field at once.
pub fn build_config(global: &RawBlock, tasks: &[RawBlock]) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    const GLOBAL_KEYS: [&str; 4] = ["master_seed", "workers", "ci_level", "band_alpha"];
    for (k, _) in &global.entries {
        if !GLOBAL_KEYS.contains(&k.as_str()) {
            errors.push(format!("{k}: unknown global key"));
        }
    }

    let master_seed = match global.get("master_seed") {
        None => {
            errors.push("master_seed: missing (seeds are mandatory)".into());
            0
        }
        Some(v) => parse_u64(v).unwrap_or_else(|e| {
            errors.push(format!("master_seed: {e}"));
            0
        }),
    };
    let workers = match global.get("workers") {
        None => Workers::Auto,
        Some(v) => v.parse().unwrap_or_else(|e: Error| {
            errors.push(format!("workers: {}", strip(&e)));
            Workers::Auto
        }),
    };
    let ci_level = open_unit(global.get("ci_level"), DEFAULT_CI_LEVEL, "ci_level", &mut errors);
    let band_alpha = open_unit(global.get("band_alpha"), DEFAULT_BAND_ALPHA, "band_alpha", &mut errors);

    let mut ids = BTreeSet::new();
    let mut parsed = Vec::new();
    for (i, block) in tasks.iter().enumerate() {
        let path = format!("task[{}]", i + 1);
        if let Some(task) = build_task(block, i, master_seed, &path, &mut errors) {
            if !ids.insert(task.id.clone()) {
                errors.push(format!("{path}.id: duplicate task id '{}'", task.id));
            }
            parsed.push(task);
        }
    }

    if errors.is_empty() {
        Ok(ExperimentConfig { master_seed, workers, ci_level, band_alpha, tasks: parsed })
    } else {
        Err(Error::Config(errors))
    }
}

fn open_unit(value: Option<&str>, default: f64, key: &str, errors: &mut Vec<String>) -> f64 {
    match value {
        None => default,
        Some(v) => match parse_f64(v) {
            Ok(x) if x > 0.0 && x < 1.0 => x,
            Ok(x) => {
                errors.push(format!("{key}: {x} is outside (0, 1)"));
                default
            }
            Err(e) => {
                errors.push(format!("{key}: {e}"));
                default
            }
        },
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Validation(m) | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

const TASK_KEYS: [&str; 12] =
    ["id", "kind", "family", "bound", "S", "n", "delta", "threshold", "grid", "trials", "D", "seed"];

fn build_task(
    block: &RawBlock,
    index: usize,
    master_seed: u64,
    path: &str,
    errors: &mut Vec<String>,
) -> Option<TaskConfig> {
    let before = errors.len();
    for (k, _) in &block.entries {
        if !TASK_KEYS.contains(&k.as_str()) && k != "exact" {
            errors.push(format!("{path}.{k}: unknown task key"));
        }
    }
    let mut field = |key: &str, msg: String| errors.push(format!("{path}.{key}: {msg}"));

    let id = block.get("id").map(str::to_string).unwrap_or_else(|| format!("task-{}", index + 1));
    if id.is_empty() || id.contains(|c: char| c == ',' || c == '"' || c.is_whitespace()) {
        field("id", format!("'{id}' must be non-empty without commas, quotes or whitespace"));
    }

    let kind = match block.get("kind") {
        None => {
            field("kind", "missing".into());
            None
        }
        Some(v) => v.parse::<TaskKind>().map_err(|e| field("kind", strip(&e))).ok(),
    };

    let family = block.get("family").and_then(|v| v.parse::<Family>().map_err(|e| field("family", strip(&e))).ok());
    let bound = block.get("bound").and_then(|v| v.parse::<BoundFamily>().map_err(|e| field("bound", strip(&e))).ok());

    let s: Vec<usize> = match block.get("S") {
        None => {
            field("S", "missing".into());
            Vec::new()
        }
        Some(v) => parse_list(v, parse_u64)
            .map_err(|e| field("S", e))
            .ok()
            .map(|xs| xs.into_iter().map(|x| x as usize).collect::<Vec<_>>())
            .unwrap_or_default(),
    };
    if s.iter().any(|&x| x < 2) {
        field("S", "every S must be >= 2".into());
    }

    let n: Vec<u64> = block
        .get("n")
        .map(|v| parse_list(v, parse_u64).map_err(|e| field("n", e)).unwrap_or_default())
        .unwrap_or_default();
    if n.contains(&0) {
        field("n", "every n must be >= 1".into());
    }

    let delta: Vec<f64> = block
        .get("delta")
        .map(|v| parse_list(v, parse_f64).map_err(|e| field("delta", e)).unwrap_or_default())
        .unwrap_or_default();
    if let Some(d) = delta.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
        field("delta", format!("{d} is outside (0, 1]"));
    }

    let threshold_key = if block.get("grid").is_some() { "grid" } else { "threshold" };
    if block.get("grid").is_some() && block.get("threshold").is_some() {
        field("grid", "use either grid or threshold, not both".into());
    }
    let threshold: Vec<f64> = block
        .get(threshold_key)
        .map(|v| parse_list(v, parse_f64).map_err(|e| field(threshold_key, e)).unwrap_or_default())
        .unwrap_or_default();

    let trials = match block.get("trials") {
        None => DEFAULT_TRIALS,
        Some(v) => parse_u64(v).map_err(|e| field("trials", e)).unwrap_or(DEFAULT_TRIALS),
    };
    if trials == 0 {
        field("trials", "must be >= 1".into());
    }
    if trials > MAX_TRIALS {
        field("trials", format!("{trials} exceeds the per-row limit {MAX_TRIALS}"));
    }

    let d = match block.get("D") {
        None => DEFAULT_D,
        Some(v) => parse_f64(v).map_err(|e| field("D", e)).unwrap_or(DEFAULT_D),
    };
    if !(d > 0.0) {
        field("D", format!("{d} must be > 0"));
    }

    let seed = match block.get("seed") {
        None => master_seed,
        Some(v) => parse_u64(v).map_err(|e| field("seed", e)).unwrap_or(master_seed),
    };

    let exact = match block.get("exact") {
        None => false,
        Some(v) => match v.trim() {
            "true" => true,
            "false" => false,
            other => {
                field("exact", format!("expected true or false, got '{other}'"));
                false
            }
        },
    };

    if let Some(kind) = kind {
        let has = |k: &str| block.get(k).is_some();
        let forbid = |key: &str, field: &mut dyn FnMut(&str, String)| {
            if has(key) {
                field(key, format!("not allowed for kind {kind}"));
            }
        };
        match kind {
            TaskKind::Falsify => {
                if bound.is_none() && !has("bound") {
                    field("bound", "missing".into());
                }
                if !has("n") {
                    field("n", "missing".into());
                }
                if !has("delta") {
                    field("delta", "missing".into());
                }
                if trials < MIN_FALSIFY_TRIALS {
                    field("trials", format!("falsify needs >= {MIN_FALSIFY_TRIALS} trials"));
                }
                forbid("threshold", &mut field);
                forbid("grid", &mut field);
                forbid("exact", &mut field);
            }
            TaskKind::Tail | TaskKind::Quantiles => {
                if !has(threshold_key) {
                    field(if kind == TaskKind::Tail { "threshold" } else { "grid" }, "missing".into());
                }
                if threshold.iter().any(|t| !t.is_finite()) {
                    field(threshold_key, "values must be finite".into());
                }
                if kind == TaskKind::Quantiles && threshold.windows(2).any(|w| w[1] < w[0]) {
                    field(threshold_key, "grid must be ascending".into());
                }
                if !has("n") && has("family") {
                    field("family", "requires n (omit both for the limit law)".into());
                }
                if exact && (kind == TaskKind::Quantiles || !has("n") || family == Some(Family::Dirichlet)) {
                    field("exact", "only available for finite-n multinomial tail tasks".into());
                }
                forbid("delta", &mut field);
                forbid("bound", &mut field);
            }
            TaskKind::AsymptoticMean => {
                forbid("n", &mut field);
                forbid("family", &mut field);
                forbid("delta", &mut field);
                forbid("threshold", &mut field);
                forbid("grid", &mut field);
                forbid("bound", &mut field);
                forbid("exact", &mut field);
            }
        }
    }

    if errors.len() > before {
        return None;
    }
    let kind = kind?;
    let family = match kind {
        TaskKind::Falsify => Some(family.unwrap_or(Family::Multinomial)),
        TaskKind::AsymptoticMean => None,
        _ if n.is_empty() => None,
        _ => Some(family.unwrap_or(Family::Multinomial)),
    };
    Some(TaskConfig { id, kind, family, bound, s, n, delta, threshold, trials, d, seed, exact })
}

pub fn parse_u64(v: &str) -> std::result::Result<u64, String> {
    let t = v.trim().replace('_', "");
    if let Ok(x) = t.parse::<u64>() {
        return Ok(x);
    }
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("expected a nonnegative integer, got '{}'", v.trim())),
    }
}

pub fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let t = v.trim();
    match t.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got '{t}'")),
    }
}

/// Comma list, or `start:stop:count` with `count >= 2` evenly spaced points.
pub fn parse_list<T, F>(v: &str, parse: F) -> std::result::Result<Vec<T>, String>
where
    F: Fn(&str) -> std::result::Result<T, String>,
    T: FromF64,
{
    let v = v.trim();
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:stop:count, got '{v}'"));
        }
        let start = parse_f64(parts[0])?;
        let stop = parse_f64(parts[1])?;
        let count = parse_u64(parts[2])?;
        if count < 2 {
            return Err("range count must be >= 2".into());
        }
        return (0..count)
            .map(|i| {
                let x = start + (stop - start) * i as f64 / (count - 1) as f64;
                T::from_f64(x)
            })
            .collect();
    }
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(format!("empty list element in '{v}'"));
    }
    items.into_iter().map(parse).collect()
}

pub trait FromF64: Sized {
    fn from_f64(x: f64) -> std::result::Result<Self, String>;
}

impl FromF64 for f64 {
    fn from_f64(x: f64) -> std::result::Result<Self, String> {
        Ok(x)
    }
}

impl FromF64 for u64 {
    fn from_f64(x: f64) -> std::result::Result<Self, String> {
        let r = x.round();
        if r < 0.0 || (x - r).abs() > 1e-9 {
            return Err(format!("range produced non-integer value {x}"));
        }
        Ok(r as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "master_seed = 7\n[task]\nkind = falsify\nbound = agrawal\nS = 50\nn = 1e4\ndelta = 0.05\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.master_seed, 7);
        assert_eq!(c.ci_level, 0.95);
        assert_eq!(c.workers, Workers::Auto);
        let t = &c.tasks[0];
        assert_eq!(t.id, "task-1");
        assert_eq!(t.trials, 10_000);
        assert_eq!(t.d, 1.0);
        assert_eq!(t.n, vec![10_000]);
        assert_eq!(t.family, Some(Family::Multinomial));
        assert_eq!(t.seed, 7);
    }

    #[test]
    fn bad_delta_names_field() {
        let text = MINIMAL.replace("delta = 0.05", "delta = 1.5");
        match parse_config(&text) {
            Err(Error::Config(errs)) => assert!(errs.iter().any(|e| e.starts_with("task[1].delta")), "{errs:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("master_seed = 7\n", "");
        match parse_config(&text) {
            Err(Error::Config(errs)) => assert!(errs.iter().any(|e| e.starts_with("master_seed"))),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        match parse_config("master_seed = 1\n[task]\nkind falsify\n") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("[tasks]\n"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("a = 1\na = 2\n"), Err(Error::Syntax { line: 2, .. })));
    }

    #[test]
    fn every_invalid_field_is_listed() {
        let text = "master_seed = x\nworkers = 0\n[task]\nkind = tail\nS = 1\ntrials = 0\nbogus = 3\n";
        let Err(Error::Config(errs)) = parse_config(text) else { panic!() };
        for key in ["master_seed", "workers", "task[1].S", "task[1].trials", "task[1].bogus", "task[1].threshold"] {
            assert!(errs.iter().any(|e| e.starts_with(key)), "missing {key} in {errs:?}");
        }
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1, 2,3", parse_u64).unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_list("0:1:5", parse_f64).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_list("100:400:4", parse_u64).unwrap(), vec![100, 200, 300, 400]);
        assert!(parse_list("1,,2", parse_u64).is_err());
        assert!(parse_list("0:1:3", parse_u64).is_err());
        assert_eq!(parse_u64("1e5").unwrap(), 100_000);
        assert_eq!(parse_u64("10_000").unwrap(), 10_000);
        assert!(parse_u64("1.5").is_err());
    }

    #[test]
    fn kind_specific_rules() {
        let limit = "master_seed = 1\n[task]\nkind = quantiles\nS = 5\ngrid = 0:3:31\n";
        let c = parse_config(limit).unwrap();
        assert_eq!(c.tasks[0].family, None);
        assert_eq!(c.tasks[0].threshold.len(), 31);

        let bad = "master_seed = 1\n[task]\nkind = asymptotic-mean\nS = 5\nn = 100\n";
        assert!(parse_config(bad).is_err());
        let bad = "master_seed = 1\n[task]\nkind = quantiles\nS = 5\ngrid = 1, 0\n";
        assert!(parse_config(bad).is_err());
        let bad = "master_seed = 1\n[task]\nkind = tail\nS = 5\nthreshold = 1\nfamily = dirichlet\n";
        assert!(parse_config(bad).is_err());
        let bad = "master_seed = 1\n[task]\nid = a\nkind = tail\nS = 5\nthreshold = 1\n[task]\nid = a\nkind = tail\nS = 5\nthreshold = 1\n";
        assert!(parse_config(bad).is_err());
    }
}
