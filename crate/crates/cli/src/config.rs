// SPDX-License-Identifier: MIT OR Apache-2.0

//! Flag/config-file resolution.
//!
//! A config file is a flat TOML or JSON table keyed by long flag names
//! (`alpha-qq` or `alpha_qq`). Flags given on the command line win; keys the
//! subcommand never asks for are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    effective: BTreeMap<String, String>,
}

fn scalar_toml(key: &str, v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::Usage(format!("config key `{key}` must be a scalar"))),
    }
}

fn scalar_json(key: &str, v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        _ => Err(CliError::Usage(format!("config key `{key}` must be a scalar"))),
    }
}

impl Settings {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Settings {
            file: pairs.into_iter().map(|(k, v)| (k.replace('_', "-"), v)).collect(),
            ..Default::default()
        }
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let bad = |e: String| CliError::Usage(format!("{}: {e}", path.display()));
        let pairs: Vec<(String, String)> = if path.extension().is_some_and(|e| e == "json") {
            let map: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            map.iter().map(|(k, v)| Ok((k.clone(), scalar_json(k, v)?))).collect::<Result<_>>()?
        } else {
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string()))?;
            table.iter().map(|(k, v)| Ok((k.clone(), scalar_toml(k, v)?))).collect::<Result<_>>()?
        };
        Ok(Self::from_pairs(pairs))
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let Some(raw) = self.file.get(key) else {
            return Ok(None);
        };
        self.used.insert(key.to_string());
        raw.parse()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`: {e}")))
    }

    /// Flag value, else config value, else `default`; recorded in the effective config.
    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let from_file = self.from_file(key)?;
        let v = flag.or(from_file).unwrap_or(default);
        self.effective.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Like [`Settings::value`] without a default; absent values are not recorded.
    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let from_file = self.from_file(key)?;
        let v = flag.or(from_file);
        if let Some(v) = &v {
            self.effective.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    /// A presence flag: set on the command line, else the config value, else false.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let from_file: Option<bool> = self.from_file(key)?;
        let v = flag || from_file.unwrap_or(false);
        self.effective.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Records a derived value that is not itself a flag.
    pub fn record(&mut self, key: &str, value: impl Display) {
        self.effective.insert(key.to_string(), value.to_string());
    }

    /// The effective configuration, failing on config keys nobody consumed.
    pub fn finish(&self) -> Result<BTreeMap<String, String>> {
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !self.used.contains(*k))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!("unknown config keys: {}", unknown.join(", "))));
        }
        Ok(self.effective.clone())
    }
}
