//! Run configuration: a TOML file of `key = value` pairs under `[section]` headers.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{key} = {value} is out of range: {rule}")]
    OutOfRange { key: String, value: String, rule: &'static str },
    #[error("override {0:?} is not of the form section.key=value")]
    BadOverride(String),
}

/// `ℓ_p` norm exponent; `∞` for the max norm. Written `linf`, `l1`, `l2` or `lp:<p>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NormSpec(pub f64);

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            p if p.is_infinite() => f.write_str("linf"),
            1.0 => f.write_str("l1"),
            2.0 => f.write_str("l2"),
            p => write!(f, "lp:{p}"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("norm {s:?} is not linf, l1, l2 or lp:<p> with p >= 1");
        let p = match s {
            "linf" => f64::INFINITY,
            "l1" => 1.0,
            "l2" => 2.0,
            _ => match s.strip_prefix("lp:").ok_or_else(bad)? {
                "inf" => f64::INFINITY,
                v => v.parse().map_err(|_| bad())?,
            },
        };
        if p >= 1.0 {
            Ok(NormSpec(p))
        } else {
            Err(bad())
        }
    }
}

impl TryFrom<String> for NormSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<NormSpec> for String {
    fn from(n: NormSpec) -> String {
        n.to_string()
    }
}

/// `power:<x>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PowerSpec(pub f64);

impl fmt::Display for PowerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "power:{}", self.0)
    }
}

impl FromStr for PowerSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.strip_prefix("power:").and_then(|v| v.parse().ok()).map(PowerSpec).ok_or_else(|| format!("{s:?} is not of the form power:<x>"))
    }
}

impl TryFrom<String> for PowerSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<PowerSpec> for String {
    fn from(p: PowerSpec) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceSection {
    pub n: usize,
    pub norm: NormSpec,
    pub radius: f64,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self { n: 1, norm: NormSpec(f64::INFINITY), radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusSection {
    pub eta: PowerSpec,
}

impl Default for ModulusSection {
    fn default() -> Self {
        Self { eta: PowerSpec(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiSection {
    pub phi: PowerSpec,
}

impl Default for PhiSection {
    fn default() -> Self {
        Self { phi: PowerSpec(2.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub quad_tol: f64,
    pub root_tol: f64,
    pub k_max: usize,
    /// Absent means `1e-15·r_0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { quad_tol: 1e-9, root_tol: 1e-10, k_max: 200, r_min: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub seed: u64,
    pub pairs: usize,
    pub samples: usize,
    pub sup_samples: usize,
    pub grid: usize,
    pub shards: usize,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { seed: 1, pairs: 200, samples: 100_000, sup_samples: 1000, grid: 1024, shards: 8, jobs: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Lower cut `δ = r_m·factor` for a divergent terminal level; 0 refuses to simulate.
    pub truncate_terminal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugateSection {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub numeric: bool,
}

impl Default for ConjugateSection {
    fn default() -> Self {
        Self { x_min: 1e-3, x_max: 1e3, points: 50, numeric: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevSection {
    pub corpus_seed: u64,
}

impl Default for SobolevSection {
    fn default() -> Self {
        Self { corpus_seed: 17 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSection,
    pub modulus: ModulusSection,
    pub phi: PhiSection,
    pub solver: SolverSection,
    pub monte_carlo: MonteCarloSection,
    pub simulate: SimulateSection,
    pub conjugate: ConjugateSection,
    pub sobolev: SobolevSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `section.key=value`. The value is read as TOML, falling back to a bare string;
    /// `solver.r_min=auto` clears the override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (path, raw) = spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
        let (section, key) = path.trim().split_once('.').ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
        let raw = raw.trim();
        let mut table = toml::Table::try_from(&*self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let sec = table
            .entry(section)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
        if (section, key, raw) == ("solver", "r_min", "auto") {
            sec.remove(key);
        } else {
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.into()));
            sec.insert(key.into(), value);
        }
        *self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String, rule| Err(ConfigError::OutOfRange { key: key.into(), value, rule });
        let (sp, so, mc, cj) = (&self.space, &self.solver, &self.monte_carlo, &self.conjugate);
        if !(1..=6).contains(&sp.n) {
            return bad("space.n", sp.n.to_string(), "n must lie in [1, 6]");
        }
        if !(sp.radius > 0.0 && sp.radius.is_finite()) {
            return bad("space.radius", sp.radius.to_string(), "radius must be positive and finite");
        }
        let alpha = self.modulus.eta.0;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return bad("modulus.eta", self.modulus.eta.to_string(), "alpha must lie in (0, 1]");
        }
        let p = self.phi.phi.0;
        if !(p > 1.0 && p.is_finite()) {
            return bad("phi.phi", self.phi.phi.to_string(), "p must exceed 1");
        }
        for (key, v) in [("solver.quad_tol", so.quad_tol), ("solver.root_tol", so.root_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return bad(key, v.to_string(), "tolerance must lie in (0, 1e-2]");
            }
        }
        if so.k_max == 0 {
            return bad("solver.k_max", "0".into(), "k_max must be at least 1");
        }
        if let Some(r) = so.r_min {
            if r.is_nan() || r <= 0.0 {
                return bad("solver.r_min", r.to_string(), "r_min must be positive");
            }
        }
        for (key, v, min) in [
            ("monte_carlo.pairs", mc.pairs, 1),
            ("monte_carlo.samples", mc.samples, 2),
            ("monte_carlo.sup_samples", mc.sup_samples, 1),
            ("monte_carlo.grid", mc.grid, 2),
            ("monte_carlo.shards", mc.shards, 1),
            ("conjugate.points", cj.points, 2),
        ] {
            if v < min {
                return bad(key, v.to_string(), "count below its minimum");
            }
        }
        let t = self.simulate.truncate_terminal;
        if !(0.0..1.0).contains(&t) {
            return bad("simulate.truncate_terminal", t.to_string(), "factor must lie in [0, 1)");
        }
        if !(cj.x_min > 0.0 && cj.x_max > cj.x_min && cj.x_max.is_finite()) {
            return bad("conjugate.x_min", format!("{}..{}", cj.x_min, cj.x_max), "need 0 < x_min < x_max < inf");
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&toml::to_string(self).map_err(|_| fmt::Error)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig { space: SpaceSection { n: 3, norm: NormSpec(3.5), radius: 0.7 }, ..Default::default() };
        cfg.modulus.eta = PowerSpec(1.0 / 3.0);
        cfg.solver.r_min = Some(1e-12);
        cfg.solver.quad_tol = 0.1 + 0.2 - 0.3 + 1e-9;
        assert_eq!(RunConfig::parse(&cfg.to_string()).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&RunConfig::default().to_string()).unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(RunConfig::parse("[phi]\nphi = \"cubic\"\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::parse("[space]\nn = 7\n"), Err(ConfigError::OutOfRange { .. })));
        assert!(matches!(RunConfig::parse("[modulus]\neta = \"power:1.5\"\n"), Err(ConfigError::OutOfRange { .. })));
        assert!(matches!(RunConfig::parse("[nowhere]\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::parse("[space]\ncolour = \"red\"\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("space.norm=lp:4").unwrap();
        assert_eq!(cfg.space.norm, NormSpec(4.0));
        cfg.apply_override("space.n = 3").unwrap();
        assert_eq!(cfg.space.n, 3);
        cfg.apply_override("solver.r_min=1e-9").unwrap();
        assert_eq!(cfg.solver.r_min, Some(1e-9));
        cfg.apply_override("solver.r_min=auto").unwrap();
        assert_eq!(cfg.solver.r_min, None);
        assert!(cfg.apply_override("space.norm").is_err());
        assert!(cfg.apply_override("space.n=many").is_err());
        assert!(cfg.apply_override("nowhere.key=1").is_err());
    }
}
