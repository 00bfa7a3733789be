//! Run configuration: defaults, a flat `key = value` file, and command-line
//! overrides, applied in that order.

use std::path::{Path, PathBuf};

use pyics_core::diagnostics::DevianceMode;
use pyics_core::gmddp::GmddpParams;
use pyics_core::pyprocess::PyParams;
use pyics_core::samplers::{Algorithm, DEFAULT_JUMP_CAP, DEFAULT_M};
use pyics_core::truncation::DEFAULT_MN_CAP;
use serde_json::{json, Value};

use crate::error::{usage, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fit,
    Benchmark,
    Truncation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Benchmark => "benchmark",
            Command::Truncation => "truncation",
        }
    }
}

/// A sampler selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exchangeable(Algorithm),
    Gmddp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exchangeable(a) => a.name(),
            Method::Gmddp => "gmddp-ics",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        if name == "gmddp-ics" {
            return Some(Method::Gmddp);
        }
        Algorithm::from_name(name).map(Method::Exchangeable)
    }
}

/// Built-in data generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Synthetic {
    /// `n` draws from the two-component benchmark mixture.
    TwoGaussian,
    /// Two groups of `n` draws each, sharing one component.
    TwoGroup,
}

impl Synthetic {
    pub fn name(self) -> &'static str {
        match self {
            Synthetic::TwoGaussian => "two-gaussian",
            Synthetic::TwoGroup => "two-group",
        }
    }
}

/// Every setting a command may read.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algorithm: Vec<Method>,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub z: f64,
    pub m: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    pub grid_min: Option<Vec<f64>>,
    pub grid_max: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
    pub jump_cap: usize,
    pub band_level: f64,
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    pub deviance: DevianceMode,
    pub standardize: bool,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub synthetic: Option<Synthetic>,
    pub n: Vec<usize>,
    pub group_column: Option<bool>,
    pub m0: Option<Vec<f64>>,
    pub k0: Option<f64>,
    pub a0: f64,
    pub b0: f64,
    pub nu0: Option<f64>,
    pub s0: f64,
    pub replicates: usize,
    pub thresholds: Vec<u64>,
    pub reps: usize,
    pub mn_cap: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: vec![Method::Exchangeable(Algorithm::Ics)],
            sigma: vec![0.0],
            theta: vec![1.0],
            z: 0.5,
            m: DEFAULT_M,
            iterations: 1500,
            burnin: 500,
            seed: 0,
            grid_min: None,
            grid_max: None,
            grid_points: None,
            jump_cap: DEFAULT_JUMP_CAP,
            band_level: 0.9,
            input: None,
            output: PathBuf::from("pyics-out"),
            deviance: DevianceMode::Log,
            standardize: false,
            threads: 0,
            synthetic: None,
            n: vec![200],
            group_column: None,
            m0: None,
            k0: None,
            a0: 2.0,
            b0: 1.0,
            nu0: None,
            s0: 1.0,
            replicates: 10,
            thresholds: vec![1_000, 1_000_000, 1_000_000_000],
            reps: 100,
            mn_cap: DEFAULT_MN_CAP,
        }
    }
}

/// Recognized keys, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "algorithm",
    "sigma",
    "theta",
    "z",
    "m",
    "iterations",
    "burnin",
    "seed",
    "grid_min",
    "grid_max",
    "grid_points",
    "jump_cap",
    "band_level",
    "input",
    "output",
    "deviance",
    "standardize",
    "threads",
    "synthetic",
    "n",
    "group_column",
    "m0",
    "k0",
    "a0",
    "b0",
    "nu0",
    "s0",
    "replicates",
    "thresholds",
    "reps",
    "mn_cap",
];

fn bad(key: &str, value: &str, what: &str) -> CliError {
    usage(format!("{key}: cannot parse {value:?} as {what}"))
}

fn real(key: &str, value: &str) -> CliResult<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(key, value, "a number"))
}

/// Nonnegative integer; scientific notation such as `1e9` is accepted.
fn count(key: &str, value: &str) -> CliResult<u64> {
    let v = value.trim();
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(bad(key, value, "a nonnegative integer")),
    }
}

fn list<T>(key: &str, value: &str, item: impl Fn(&str, &str) -> CliResult<T>) -> CliResult<Vec<T>> {
    let items = value
        .split(',')
        .map(|v| item(key, v))
        .collect::<CliResult<Vec<_>>>()?;
    if items.is_empty() {
        return Err(bad(key, value, "a nonempty list"));
    }
    Ok(items)
}

fn boolean(key: &str, value: &str) -> CliResult<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "a boolean")),
    }
}

fn size(key: &str, value: &str) -> CliResult<usize> {
    usize::try_from(count(key, value)?).map_err(|_| bad(key, value, "a size"))
}

impl RunConfig {
    /// Sets one key. Keys may use `-` or `_` as separator.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "algorithm" => {
                self.algorithm = list(k, value, |k, v| {
                    Method::from_name(v.trim()).ok_or_else(|| {
                        bad(
                            k,
                            v,
                            "an algorithm (ics, marginal, slice-dep, slice-indep, gmddp-ics)",
                        )
                    })
                })?
            }
            "sigma" => self.sigma = list(k, value, real)?,
            "theta" => self.theta = list(k, value, real)?,
            "z" => self.z = real(k, value)?,
            "m" => self.m = size(k, value)?,
            "iterations" => self.iterations = size(k, value)?,
            "burnin" => self.burnin = size(k, value)?,
            "seed" => self.seed = count(k, value)?,
            "grid_min" => self.grid_min = Some(list(k, value, real)?),
            "grid_max" => self.grid_max = Some(list(k, value, real)?),
            "grid_points" => self.grid_points = Some(size(k, value)?),
            "jump_cap" => self.jump_cap = size(k, value)?,
            "band_level" => self.band_level = real(k, value)?,
            "input" => self.input = Some(PathBuf::from(value.trim())),
            "output" => self.output = PathBuf::from(value.trim()),
            "deviance" => {
                self.deviance = match value.trim() {
                    "log" => DevianceMode::Log,
                    "literal" => DevianceMode::Literal,
                    _ => return Err(bad(k, value, "a deviance mode (log, literal)")),
                }
            }
            "standardize" => self.standardize = boolean(k, value)?,
            "threads" => self.threads = size(k, value)?,
            "synthetic" => {
                self.synthetic = match value.trim() {
                    "two-gaussian" => Some(Synthetic::TwoGaussian),
                    "two-group" => Some(Synthetic::TwoGroup),
                    "none" => None,
                    _ => return Err(bad(k, value, "a generator (two-gaussian, two-group)")),
                }
            }
            "n" => self.n = list(k, value, size)?,
            "group_column" => self.group_column = Some(boolean(k, value)?),
            "m0" => self.m0 = Some(list(k, value, real)?),
            "k0" => self.k0 = Some(real(k, value)?),
            "a0" => self.a0 = real(k, value)?,
            "b0" => self.b0 = real(k, value)?,
            "nu0" => self.nu0 = Some(real(k, value)?),
            "s0" => self.s0 = real(k, value)?,
            "replicates" => self.replicates = size(k, value)?,
            "thresholds" => self.thresholds = list(k, value, count)?,
            "reps" => self.reps = size(k, value)?,
            "mn_cap" => self.mn_cap = count(k, value)?,
            _ => return Err(usage(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Layers `file` (if any) and then `overrides` on top of the defaults.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut config = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
            for (k, v) in parse_pairs(&text)? {
                config.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            config.set(k, v)?;
        }
        Ok(config)
    }

    pub fn is_gmddp(&self) -> bool {
        self.algorithm.contains(&Method::Gmddp)
    }

    /// Checks the settings a command depends on.
    pub fn validate(&self, command: Command) -> CliResult<()> {
        if command != Command::Truncation {
            if self.iterations <= self.burnin {
                return Err(usage(format!(
                    "iterations ({}) must exceed burnin ({})",
                    self.iterations, self.burnin
                )));
            }
            if self.iterations - self.burnin < 2 {
                return Err(usage("at least two iterations must be kept after burn-in"));
            }
            if self.m == 0 || self.jump_cap == 0 {
                return Err(usage("m and jump_cap must be positive"));
            }
            if !(self.band_level > 0.0 && self.band_level < 1.0) {
                return Err(usage(format!(
                    "band_level must lie in (0, 1), got {}",
                    self.band_level
                )));
            }
            if matches!(self.grid_points, Some(p) if p < 2) {
                return Err(usage("grid_points must be at least 2"));
            }
        }
        match command {
            Command::Fit => {
                for (key, len) in [
                    ("algorithm", self.algorithm.len()),
                    ("sigma", self.sigma.len()),
                ] {
                    if len != 1 {
                        return Err(usage(format!("fit takes a single {key}, got {len}")));
                    }
                }
                if self.theta.len() != 1 || self.n.len() != 1 {
                    return Err(usage("fit takes a single theta and a single n"));
                }
            }
            Command::Benchmark => {
                if self.replicates == 0 {
                    return Err(usage("replicates must be at least 1"));
                }
                if self.is_gmddp() {
                    return Err(usage("benchmark covers the exchangeable samplers only"));
                }
            }
            Command::Truncation => {
                if self.reps == 0 || self.mn_cap == 0 {
                    return Err(usage("reps and mn_cap must be positive"));
                }
                if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
                    return Err(usage("thresholds must be sorted ascending"));
                }
                if self.n.contains(&0) {
                    return Err(usage("n must be at least 1"));
                }
            }
        }
        if self.is_gmddp() {
            if self.sigma.iter().any(|&s| s != 0.0) {
                return Err(usage("gmddp-ics is Dirichlet-based; sigma must be 0"));
            }
            for &t in &self.theta {
                GmddpParams::new(t, self.z, 2).map_err(|e| usage(e.to_string()))?;
            }
        } else {
            for &s in &self.sigma {
                for &t in &self.theta {
                    PyParams::new(s, t).map_err(|e| usage(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    /// Every setting as a JSON object, keys in [`KEYS`] order.
    pub fn to_json(&self) -> Value {
        let opt = |v: &Option<Vec<f64>>| v.as_ref().map_or(Value::Null, |v| json!(v));
        let mut map = serde_json::Map::new();
        let entries: Vec<(&str, Value)> = vec![
            (
                "algorithm",
                json!(self.algorithm.iter().map(|a| a.name()).collect::<Vec<_>>()),
            ),
            ("sigma", json!(self.sigma)),
            ("theta", json!(self.theta)),
            ("z", json!(self.z)),
            ("m", json!(self.m)),
            ("iterations", json!(self.iterations)),
            ("burnin", json!(self.burnin)),
            ("seed", json!(self.seed)),
            ("grid_min", opt(&self.grid_min)),
            ("grid_max", opt(&self.grid_max)),
            ("grid_points", json!(self.grid_points)),
            ("jump_cap", json!(self.jump_cap)),
            ("band_level", json!(self.band_level)),
            (
                "input",
                json!(self.input.as_ref().map(|p| p.display().to_string())),
            ),
            ("output", json!(self.output.display().to_string())),
            ("deviance", json!(self.deviance.name())),
            ("standardize", json!(self.standardize)),
            ("threads", json!(self.threads)),
            ("synthetic", json!(self.synthetic.map(Synthetic::name))),
            ("n", json!(self.n)),
            ("group_column", json!(self.group_column)),
            ("m0", opt(&self.m0)),
            ("k0", json!(self.k0)),
            ("a0", json!(self.a0)),
            ("b0", json!(self.b0)),
            ("nu0", json!(self.nu0)),
            ("s0", json!(self.s0)),
            ("replicates", json!(self.replicates)),
            ("thresholds", json!(self.thresholds)),
            ("reps", json!(self.reps)),
            ("mn_cap", json!(self.mn_cap)),
        ];
        debug_assert_eq!(entries.len(), KEYS.len());
        for (k, v) in entries {
            map.insert(k.to_string(), v);
        }
        Value::Object(map)
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            usage(format!(
                "config line {}: expected key = value, got {line:?}",
                i + 1
            ))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
