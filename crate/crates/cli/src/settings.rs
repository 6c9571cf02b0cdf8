//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names without dashes (`m`, `delta`, `L`, `rrep`,
//! `samples`, `seed`, ...). Blank lines and lines starting with `#` are
//! ignored. Flags given on the command line win over file values.

use hqr_core::{Error, Result};
use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", ln + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("config line {}: empty key", ln + 1)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flag value, else file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::InvalidArgument(format!("config key {key} = {v}: {e}"))),
            None => Ok(None),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        self.pick_opt::<bool>(None, key).map(|v| v.unwrap_or(false))
    }
}
