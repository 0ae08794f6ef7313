//! Settings from command-line flags, falling back to a `key = value` file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Values read from a config file. Keys are the long flag names without
/// the leading dashes; `#` starts a comment.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
            let key = key.trim().trim_start_matches("--").to_string();
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                bail!("line {}: duplicate key {key:?}", no + 1);
            }
        }
        Ok(Self { values })
    }

    /// `flag` if given, otherwise the parsed config entry for `key`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key:?}: cannot parse {raw:?}: {e}")),
        }
    }

    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        Ok(self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

/// Parses `1,2,3` into a list.
pub fn parse_list<T>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|e| anyhow!("{what}: cannot parse {part:?}: {e}"))
        })
        .collect()
}

/// Parses `a:b,c:d` into pairs.
pub fn parse_pairs<T>(raw: &str, what: &str) -> Result<Vec<(T, T)>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|part| {
            let (a, b) = part
                .split_once(':')
                .ok_or_else(|| anyhow!("{what}: expected a:b, got {part:?}"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<T>()
                    .map_err(|e| anyhow!("{what}: cannot parse {s:?}: {e}"))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}
