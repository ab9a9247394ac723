//! Simulation configuration and its `key = value` text format.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Unknown or repeated keys are errors. Rendering writes every set
//! field in a fixed order, so `parse(render(c)) == c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::couplings::{Coupling, PatchMode, RotationParams, Strategy, StrategyKind};
use crate::error::{Error, Result};
use crate::sim::TimeGrid;
use crate::spaces::{SpacePoint, SpaceSpec};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "BMCOUPLE_SEED";

pub const KEYS: [&str; 16] = [
    "space", "strategy", "k", "alpha", "eps", "eta", "rho0", "x", "y", "h", "T", "paths", "seed",
    "record_every", "out_dir", "threads",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub space: SpaceSpec,
    pub strategy: StrategyKind,
    pub k: f64,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    /// Start distance for the canonical placement.
    pub rho0: f64,
    /// Explicit start points in ambient coordinates; both or neither.
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub h: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub record_every: usize,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            space: SpaceSpec::sphere(2).expect("sphere:2"),
            strategy: StrategyKind::FixedS2,
            k: 0.0,
            alpha: None,
            eps: None,
            eta: None,
            rho0: 1.0,
            x: None,
            y: None,
            h: 1e-3,
            t_end: 1.0,
            n_paths: 100,
            seed: 0,
            record_every: 1,
            out_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

/// Ordered `key = value` pairs of a config file.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse(format!("line {}: unknown key `{key}`", i + 1)));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: repeated key `{key}`", i + 1)));
        }
    }
    Ok(map)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn finite(key: &str, value: &str) -> Result<f64> {
    let v: f64 = num(key, value)?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn coords(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|s| finite(key, s.trim())).collect()
}

impl SimConfig {
    /// Defaults, with the seed taken from [`SEED_ENV`] when it is set.
    pub fn with_env_defaults() -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.seed = num(SEED_ENV, seed.trim())?;
        }
        Ok(cfg)
    }

    /// Applies the pairs on top of `self`.
    pub fn apply(mut self, pairs: &BTreeMap<String, String>) -> Result<Self> {
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "space" => self.space = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "strategy" => self.strategy = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "k" => self.k = finite(key, v)?,
                "alpha" => self.alpha = Some(finite(key, v)?),
                "eps" => self.eps = Some(finite(key, v)?),
                "eta" => self.eta = Some(finite(key, v)?),
                "rho0" => self.rho0 = finite(key, v)?,
                "x" => self.x = Some(coords(key, v)?),
                "y" => self.y = Some(coords(key, v)?),
                "h" => self.h = finite(key, v)?,
                "T" => self.t_end = finite(key, v)?,
                "paths" => self.n_paths = num(key, v)?,
                "seed" => self.seed = num(key, v)?,
                "record_every" => self.record_every = num(key, v)?,
                "out_dir" => {
                    if v.is_empty() {
                        return Err(Error::Config("`out_dir` is empty".into()));
                    }
                    self.out_dir = PathBuf::from(v)
                }
                "threads" => self.threads = Some(num(key, v)?),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        Ok(self)
    }

    /// Parses a config file on top of the plain defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::default().apply(&parse_pairs(text)?)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "space = {}", self.space);
        let _ = writeln!(s, "strategy = {}", self.strategy);
        let _ = writeln!(s, "k = {}", self.k);
        if let Some(a) = self.alpha {
            let _ = writeln!(s, "alpha = {a}");
        }
        if let Some(e) = self.eps {
            let _ = writeln!(s, "eps = {e}");
        }
        if let Some(e) = self.eta {
            let _ = writeln!(s, "eta = {e}");
        }
        let _ = writeln!(s, "rho0 = {}", self.rho0);
        if let Some(x) = &self.x {
            let _ = writeln!(s, "x = {}", join(x));
        }
        if let Some(y) = &self.y {
            let _ = writeln!(s, "y = {}", join(y));
        }
        let _ = writeln!(s, "h = {}", self.h);
        let _ = writeln!(s, "T = {}", self.t_end);
        let _ = writeln!(s, "paths = {}", self.n_paths);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        if let Some(t) = self.threads {
            let _ = writeln!(s, "threads = {t}");
        }
        s
    }

    pub fn strategy_value(&self) -> Result<Strategy> {
        let patch = match (self.eps, self.eta) {
            (None, None) => PatchMode::Off,
            (Some(eps), None) => PatchMode::CutLocus { eps },
            (None, Some(eta)) => PatchMode::Diagonal { eta },
            (Some(_), Some(_)) => {
                return Err(Error::Config("set at most one of `eps` and `eta`".into()))
            }
        };
        if self.strategy != StrategyKind::Rotation && (self.alpha.is_some() || self.k != 0.0) {
            return Err(Error::Config(format!(
                "`k` and `alpha` apply to the rotation strategy, not {}",
                self.strategy
            )));
        }
        Ok(Strategy {
            kind: self.strategy,
            rotation: RotationParams {
                k: self.k,
                alpha_override: self.alpha,
            },
            patch,
        })
    }

    /// Checks everything that can be checked before simulating and returns
    /// the coupling, the start points and the time grid.
    pub fn validate(&self) -> Result<(Coupling, SpacePoint, SpacePoint, TimeGrid)> {
        if self.n_paths == 0 {
            return Err(Error::Config("`paths` must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("`threads` must be at least 1".into()));
        }
        let grid = TimeGrid::new(self.h, self.t_end, self.record_every)?;
        let (x, y) = match (&self.x, &self.y) {
            (Some(x), Some(y)) => (
                self.space.point(x).map_err(|e| Error::Config(format!("x: {e}")))?,
                self.space.point(y).map_err(|e| Error::Config(format!("y: {e}")))?,
            ),
            (None, None) => self
                .space
                .canonical_pair(self.rho0)
                .map_err(|e| Error::Config(format!("rho0: {e}")))?,
            _ => return Err(Error::Config("set both `x` and `y` or neither".into())),
        };
        let coupling = match Coupling::new(self.space, self.strategy_value()?) {
            Err(e) if !e.is_runtime() => return Err(Error::Config(e.to_string())),
            other => other?,
        };
        coupling.init(x, y)?;
        Ok((coupling, x, y, grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trip() {
        let c = SimConfig::default();
        assert_eq!(SimConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn full_round_trip() {
        let c = SimConfig {
            space: SpaceSpec::hyperbolic(3).unwrap(),
            strategy: StrategyKind::Rotation,
            k: -2.5,
            alpha: Some(0.1 + 0.2),
            eps: None,
            eta: Some(0.4),
            rho0: 1.0 / 3.0,
            x: Some(vec![1.0, 0.0, 0.0, 0.0]),
            y: Some(vec![2f64.cosh(), 2f64.sinh(), 0.0, 0.0]),
            h: 5e-4,
            t_end: 2.0,
            n_paths: 7,
            seed: u64::MAX,
            record_every: 3,
            out_dir: PathBuf::from("a dir/with spaces"),
            threads: Some(2),
        };
        assert_eq!(SimConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn parse_errors() {
        assert!(SimConfig::parse("bogus = 1").is_err());
        assert!(SimConfig::parse("k = 1\nk = 2").is_err());
        assert!(SimConfig::parse("no equals sign").is_err());
        assert!(SimConfig::parse("h = nan").is_err());
        assert!(SimConfig::parse("paths = -1").is_err());
        assert!(SimConfig::parse("# comment\n\nspace = sphere:3\n").is_ok());
    }

    #[test]
    fn validation() {
        let mut c = SimConfig::default();
        assert!(c.validate().is_ok());
        c.n_paths = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = SimConfig {
            space: SpaceSpec::euclidean(2).unwrap(),
            strategy: StrategyKind::Rotation,
            k: 1.0,
            ..SimConfig::default()
        };
        assert!(c.validate().unwrap_err().is_runtime());
        c.k = 0.0;
        assert!(c.validate().is_ok());
        c.strategy = StrategyKind::FixedS2;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
