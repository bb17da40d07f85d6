use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, HarnessError};
use crate::uflsopt::UflsOptConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Safr,
    Sfr,
    Conventional,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Safr, Scheme::Sfr, Scheme::Conventional];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Safr => "safr",
            Scheme::Sfr => "sfr",
            Scheme::Conventional => "conventional",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected safr, sfr or conventional)"))
    }
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn one_hour() -> f64 {
    1.0
}

/// A pipeline run. Relative paths in a config file resolve against the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: PathBuf,
    pub scenarios: Vec<PathBuf>,
    #[serde(default)]
    pub optimizer: UflsOptConfig,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    pub out_dir: PathBuf,
    /// Re-optimization period of the snapshot loop, hours.
    #[serde(default = "one_hour")]
    pub reopt_period_h: f64,
    /// Network snapshots for the periodic loop, one per period.
    #[serde(default)]
    pub snapshots: Vec<PathBuf>,
}

impl RunConfig {
    pub fn new(network: impl Into<PathBuf>, scenarios: Vec<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            network: network.into(),
            scenarios,
            optimizer: UflsOptConfig::default(),
            schemes: all_schemes(),
            out_dir: out_dir.into(),
            reopt_period_h: one_hour(),
            snapshots: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.network);
        resolve(&mut cfg.out_dir);
        cfg.scenarios.iter_mut().for_each(resolve);
        cfg.snapshots.iter_mut().for_each(resolve);
        Ok(cfg)
    }

    /// Checks the inputs exist and creates the output directory.
    pub fn validate(&self) -> Result<(), HarnessError> {
        for p in std::iter::once(&self.network).chain(&self.scenarios).chain(&self.snapshots) {
            if !p.is_file() {
                return Err(HarnessError::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("no scheme selected".into()));
        }
        if !(self.reopt_period_h > 0.0) {
            return Err(HarnessError::Config("reopt_period_h must be positive".into()));
        }
        self.optimizer.validate()?;
        std::fs::create_dir_all(&self.out_dir).map_err(io_err(&self.out_dir))?;
        let probe = self.out_dir.join(".write-probe");
        std::fs::write(&probe, b"").map_err(io_err(&probe))?;
        std::fs::remove_file(&probe).map_err(io_err(&probe))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_resolve_against_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("net.json"), "{}").unwrap();
        std::fs::write(dir.path().join("s.json"), "{}").unwrap();
        let cfg_path = dir.path().join("run.json");
        std::fs::write(
            &cfg_path,
            r#"{"network": "net.json", "scenarios": ["s.json"], "out_dir": "out", "schemes": ["safr"]}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.network, dir.path().join("net.json"));
        assert_eq!(cfg.schemes, vec![Scheme::Safr]);
        cfg.validate().unwrap();
        assert!(dir.path().join("out").is_dir());
    }

    #[test]
    fn missing_inputs_and_unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::new(dir.path().join("absent.json"), vec![], dir.path().join("out"));
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        let p = dir.path().join("run.json");
        std::fs::write(&p, r#"{"network": "a", "scenarios": [], "out_dir": "o", "colour": 1}"#).unwrap();
        assert!(matches!(RunConfig::load(&p), Err(HarnessError::Config(_))));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("ufls".parse::<Scheme>().is_err());
    }
}
