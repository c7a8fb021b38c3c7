//! The `key=value` experiment dialect.
//!
//! Pairs are separated by any whitespace, `#` starts a comment that runs to
//! the end of the line, and every key may appear once per source. The same
//! keys are accepted as command-line flags (`--power-iters-max` for
//! `power_iters_max`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::DEFAULT_MEMORY_BUDGET;
use crate::optimizer::AlgorithmParams;
use crate::Mixture;

/// Every key the dialect accepts.
pub const CONFIG_KEYS: [&str; 20] = [
    "mixture",
    "n",
    "k",
    "epsilon",
    "seeds",
    "variant",
    "tau",
    "steps",
    "q",
    "betas",
    "output_dir",
    "format",
    "threads",
    "algo_seed",
    "power_shift",
    "power_iters_max",
    "rayleigh_check",
    "random_v0",
    "memory_budget",
    "eigenvalues",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Radial,
    PureSphere,
    Spectrum,
    Theory,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "radial" => Ok(Variant::Radial),
            "pure_sphere" => Ok(Variant::PureSphere),
            "spectrum" => Ok(Variant::Spectrum),
            "theory" => Ok(Variant::Theory),
            _ => Err(format!(
                "unknown variant `{s}` (expected radial, pure_sphere, spectrum or theory)"
            )),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Radial => "radial",
            Variant::PureSphere => "pure_sphere",
            Variant::Spectrum => "spectrum",
            Variant::Theory => "theory",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
    Default,
}

/// One `key=value` setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

impl ConfigEntry {
    pub fn flag(key: &str, value: impl Into<String>) -> Self {
        ConfigEntry {
            key: key.to_string(),
            value: value.into(),
            origin: Origin::Flag,
        }
    }

    fn describe(&self) -> String {
        match self.origin {
            Origin::Line(l) => format!("line {l}: `{}`", self.key),
            Origin::Flag => format!("flag --{}", self.key.replace('_', "-")),
            Origin::Default => format!("default `{}`", self.key),
        }
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mixture: Mixture,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    pub variant: Variant,
    /// On-sphere step parameter; present iff `variant` is `pure_sphere`.
    pub tau: Option<f64>,
    /// On-sphere iteration count; defaults to `k`.
    pub steps: usize,
    /// Radius parameter of the spectrum point `sqrt(qN) e_1`.
    pub q: f64,
    pub betas: Vec<f64>,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Concurrent seeds; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub algo_seed: u64,
    pub power_shift: Option<f64>,
    pub power_iters_max: usize,
    pub rayleigh_check: bool,
    pub random_v0: bool,
    pub memory_budget: u128,
    /// Include the full eigenvalue list in spectrum reports.
    pub eigenvalues: bool,
}

impl ExperimentConfig {
    /// Algorithm parameters shared by every seed.
    pub fn params(&self) -> AlgorithmParams {
        AlgorithmParams {
            k: self.k,
            epsilon: self.epsilon,
            power_shift: self.power_shift,
            power_iters_max: self.power_iters_max,
            rayleigh_check: self.rayleigh_check,
            rng_seed: self.algo_seed,
            random_v0: self.random_v0,
        }
    }

    /// Validates a set of entries, reporting every problem at once.
    pub fn from_entries(entries: &[ConfigEntry]) -> Result<Self> {
        let mut problems = Vec::new();
        let mut seen: Vec<&ConfigEntry> = Vec::new();
        for e in entries {
            if !CONFIG_KEYS.contains(&e.key.as_str()) {
                problems.push(format!("{}: unknown key", e.describe()));
                continue;
            }
            if let Some(prev) = seen.iter().find(|p| p.key == e.key) {
                problems.push(format!("{}: duplicate key (first set at {})", e.describe(), prev.describe()));
                continue;
            }
            seen.push(e);
        }
        let get = |key: &str| seen.iter().find(|e| e.key == key).copied();

        fn field<T>(
            problems: &mut Vec<String>,
            entry: Option<&ConfigEntry>,
            parse: impl Fn(&str) -> Result<T, String>,
        ) -> Option<T> {
            let e = entry?;
            match parse(e.value.trim()) {
                Ok(v) => Some(v),
                Err(msg) => {
                    problems.push(format!("{}: {msg}", e.describe()));
                    None
                }
            }
        }
        fn num<T: FromStr>(s: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            s.parse::<T>().map_err(|e| format!("cannot parse `{s}`: {e}"))
        }
        fn boolean(s: &str) -> Result<bool, String> {
            match s {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("expected true or false, got `{s}`")),
            }
        }

        let mixture = field(&mut problems, get("mixture"), |s| {
            s.parse::<Mixture>().map_err(|e| e.to_string())
        });
        let variant = field(&mut problems, get("variant"), |s| s.parse::<Variant>());
        let n = field(&mut problems, get("n"), num::<usize>);
        let k = field(&mut problems, get("k"), num::<usize>);
        let epsilon = field(&mut problems, get("epsilon"), num::<f64>);
        let seeds = field(&mut problems, get("seeds"), parse_seeds);
        let tau = field(&mut problems, get("tau"), num::<f64>);
        let steps = field(&mut problems, get("steps"), num::<usize>);
        let q = field(&mut problems, get("q"), num::<f64>);
        let betas = field(&mut problems, get("betas"), |s| {
            s.split(',').map(|b| num::<f64>(b.trim())).collect::<Result<Vec<_>, _>>()
        });
        let output_dir = field(&mut problems, get("output_dir"), |s| Ok(PathBuf::from(s)));
        let format = field(&mut problems, get("format"), |s| s.parse::<Format>());
        let threads = field(&mut problems, get("threads"), num::<usize>);
        let algo_seed = field(&mut problems, get("algo_seed"), num::<u64>);
        let power_shift = field(&mut problems, get("power_shift"), num::<f64>);
        let power_iters_max = field(&mut problems, get("power_iters_max"), num::<usize>);
        let rayleigh_check = field(&mut problems, get("rayleigh_check"), boolean);
        let random_v0 = field(&mut problems, get("random_v0"), boolean);
        let memory_budget = field(&mut problems, get("memory_budget"), num::<u128>);
        let eigenvalues = field(&mut problems, get("eigenvalues"), boolean);

        let defaults = AlgorithmParams::default();
        let k = k.unwrap_or(defaults.k);
        let epsilon = epsilon.unwrap_or(defaults.epsilon);
        let q = q.unwrap_or(0.5);
        let betas = betas.unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
        let power_iters_max = power_iters_max.unwrap_or(defaults.power_iters_max);

        if get("mixture").is_none() {
            problems.push("missing required field `mixture`".into());
        }
        if get("variant").is_none() {
            problems.push("missing required field `variant`".into());
        }
        let needs_disorder = variant.is_some_and(|v| v != Variant::Theory);
        if needs_disorder {
            if get("n").is_none() {
                problems.push("missing required field `n`".into());
            }
            if get("seeds").is_none() {
                problems.push("missing required field `seeds`".into());
            }
        }
        if let Some(n) = n {
            if n < 2 {
                problems.push(format!("n must be ≥ 2 (got {n})"));
            }
        }
        if let Some(s) = &seeds {
            if s.is_empty() {
                problems.push("seeds must not be empty".into());
            }
        }
        if k < 2 {
            problems.push(format!("k must be ≥ 2 (got {k})"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            problems.push(format!("epsilon must be > 0 (got {epsilon})"));
        }
        match (variant, tau) {
            (Some(Variant::PureSphere), None) if get("tau").is_none() => {
                problems.push("missing required field `tau` (variant=pure_sphere)".into())
            }
            (Some(v), Some(_)) if v != Variant::PureSphere => {
                problems.push(format!("`tau` is only valid with variant=pure_sphere (variant={v})"))
            }
            (_, Some(t)) if !(t > 0.0 && t <= 0.5) => {
                problems.push(format!("tau must lie in (0, 0.5] (got {t})"))
            }
            _ => {}
        }
        if variant == Some(Variant::PureSphere) {
            if let Some(m) = &mixture {
                if m.pure_degree().is_none() {
                    problems.push(format!("variant=pure_sphere needs a pure mixture (got {m})"));
                }
            }
        }
        if steps == Some(0) {
            problems.push("steps must be ≥ 1".into());
        }
        if !(q > 0.0 && q <= 1.0) {
            problems.push(format!("q must lie in (0, 1] (got {q})"));
        }
        if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            problems.push(format!("betas must be positive (got {betas:?})"));
        }
        if threads == Some(0) {
            problems.push("threads must be ≥ 1".into());
        }
        if let Some(l) = power_shift {
            if !(l > 0.0 && l.is_finite()) {
                problems.push(format!("power_shift must be > 0 (got {l})"));
            }
        }
        if power_iters_max < 1 {
            problems.push("power_iters_max must be ≥ 1".into());
        }

        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let variant = variant.expect("checked above");
        Ok(ExperimentConfig {
            mixture: mixture.expect("checked above"),
            n: n.unwrap_or(0),
            k,
            epsilon,
            seeds: seeds.unwrap_or_default(),
            variant,
            tau,
            steps: steps.unwrap_or(k),
            q,
            betas,
            output_dir: output_dir.unwrap_or_else(|| PathBuf::from("spinpath-out")),
            format: format.unwrap_or(Format::Csv),
            threads,
            algo_seed: algo_seed.unwrap_or(0),
            power_shift,
            power_iters_max,
            rayleigh_check: rayleigh_check.unwrap_or(true),
            random_v0: random_v0.unwrap_or(false),
            memory_budget: memory_budget.unwrap_or(DEFAULT_MEMORY_BUDGET),
            eigenvalues: eigenvalues.unwrap_or(false),
        })
    }
}

/// `1,2,7` or half-open ranges such as `0..5`, mixed freely.
fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.parse().map_err(|_| format!("bad seed range `{item}`"))?;
            let b: u64 = b.parse().map_err(|_| format!("bad seed range `{item}`"))?;
            if b <= a {
                return Err(format!("empty seed range `{item}`"));
            }
            out.extend(a..b);
        } else {
            out.push(item.parse().map_err(|_| format!("bad seed `{item}`"))?);
        }
    }
    Ok(out)
}

/// Splits dialect text into entries without validating keys or values.
pub fn config_entries(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut entries = Vec::new();
    let mut problems = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("");
        for token in body.split_whitespace() {
            match token.split_once('=') {
                Some((k, v)) if !k.is_empty() && !v.is_empty() => entries.push(ConfigEntry {
                    key: k.to_string(),
                    value: v.to_string(),
                    origin: Origin::Line(line_no),
                }),
                _ => problems.push(format!("line {line_no}: expected key=value, got `{token}`")),
            }
        }
    }
    if problems.is_empty() {
        Ok(entries)
    } else {
        Err(Error::Config(problems.join("; ")))
    }
}

/// Parses and validates dialect text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_entries(&config_entries(text)?)
}

/// `base` with every key that also appears in `overrides` replaced.
pub fn merge_entries(base: Vec<ConfigEntry>, overrides: Vec<ConfigEntry>) -> Vec<ConfigEntry> {
    let mut out: Vec<ConfigEntry> = base
        .into_iter()
        .filter(|b| !overrides.iter().any(|o| o.key == b.key))
        .collect();
    out.extend(overrides);
    out
}
