//! Flat `key = value` configuration files. Keys are the long flag names
//! without the leading dashes; flags given on the command line win.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, allowed)
    }

    pub fn parse(text: &str, allowed: &[&str]) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected key = value", no + 1)));
            };
            let key = key.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key '{key}'", no + 1)));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Flag value if given, else the config value, else `None`.
    pub fn value<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key '{key}': {e}")))
            })
            .transpose()
    }

    /// Comma-separated list: flag values if any, else the config value.
    pub fn list<T>(&self, key: &str, flag: &[T]) -> CliResult<Option<Vec<T>>>
    where
        T: FromStr + Clone,
        T::Err: std::fmt::Display,
    {
        if !flag.is_empty() {
            return Ok(Some(flag.to_vec()));
        }
        self.raw(key)
            .map(|s| parse_list(s).map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| format!("'{x}': {e}")))
        .collect()
}

/// `SIGMA,GAMMA` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    pub sigma: f64,
    pub gamma: f64,
}

impl FromStr for Theta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = parse_list(s)?;
        match v.as_slice() {
            [sigma, gamma] => Ok(Theta {
                sigma: *sigma,
                gamma: *gamma,
            }),
            _ => Err(format!("expected SIGMA,GAMMA, got '{s}'")),
        }
    }
}
