//! Flat `key = value` experiment configs.
//!
//! One entry per line, `#` starts a comment. Environment variables named
//! `L2GDV_<KEY>` (key upper-cased) override file entries, and explicit
//! overrides (CLI flags) override both.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "L2GDV_";

/// Every key understood by [`super::ExperimentSpec::from_config`].
pub const KNOWN_KEYS: &[&str] = &[
    "problem",
    "n",
    "d",
    "mu",
    "L",
    "rank",
    "lambda",
    "problem_seed",
    "samples",
    "features",
    "classes",
    "separation",
    "partition",
    "shards_per_client",
    "l2",
    "bias",
    "positive_class",
    "images",
    "labels",
    "limit",
    "algorithm",
    "p",
    "alpha1",
    "alpha_scale",
    "theta",
    "K",
    "record_every",
    "rounds",
    "local_epochs",
    "client_fraction",
    "lr",
    "prox_mu",
    "seeds",
    "start",
    "start_radius",
    "start_seed",
    "out",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Applies `L2GDV_<KEY>` overrides from `vars` for every known key.
    pub fn apply_env_from<I, K, V>(&mut self, vars: I)
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let by_env: BTreeMap<String, &str> =
            KNOWN_KEYS.iter().map(|k| (format!("{ENV_PREFIX}{}", k.to_uppercase()), *k)).collect();
        for (name, value) in vars {
            if let Some(key) = by_env.get(name.as_ref()) {
                self.set(key, value.as_ref());
            }
        }
    }

    pub fn apply_env(&mut self) {
        self.apply_env_from(std::env::vars());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("cannot parse `{key} = {v}`")))
            })
            .transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn check_known(&self) -> Result<()> {
        match self.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// `a..b` (half-open), `a..=b`, or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds `{text}`"));
    let text = text.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = Config::parse("# comment\np = 0.5\n\ntheta=0.3 # trailing\n").unwrap();
        assert_eq!(c.require::<f64>("p").unwrap(), 0.5);
        c.apply_env_from([("L2GDV_THETA", "0.7"), ("L2GDV_BOGUS", "1"), ("HOME", "/")]);
        assert_eq!(c.require::<f64>("theta").unwrap(), 0.7);
        assert!(c.check_known().is_ok());
        c.set("thetta", 1);
        assert!(c.check_known().is_err());
        assert!(Config::parse("no equals sign").is_err());
        assert!(c.require::<f64>("lambda").is_err());
        assert!(Config::parse("p = x").unwrap().require::<f64>("p").is_err());
    }

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_seeds("5, 9,1").unwrap(), vec![5, 9, 1]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a,b").is_err());
    }
}
