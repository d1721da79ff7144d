//! key=value config files and flag/file/default resolution.

use crate::Failure;
use serde::Serialize;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// Parse `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key=value, got {line:?}", i + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Failure::usage(format!("config line {}: duplicate key {k}", i + 1)));
        }
    }
    Ok(out)
}

/// Resolves each option as flag > config file > default and records the
/// value used.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    echo: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self { file, ..Default::default() }
    }

    pub fn from_path(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?;
                Ok(Self::new(parse_config(&text)?))
            }
        }
    }

    fn from_file<T>(&mut self, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| Failure::usage(format!("config key {key}: cannot parse {s:?}: {e}"))),
        }
    }

    fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        self.echo.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let file = self.from_file(key)?;
        let v = flag.or(file);
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let v = self.optional(key, flag)?.unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| Failure::usage(format!("missing value for {key} (flag --{key} or config key {key})")))
    }

    /// A switch is on if given on the command line or set true in the file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, Failure> {
        let v = flag || self.from_file::<bool>(key)?.unwrap_or(false);
        self.record(key, &v);
        Ok(v)
    }

    /// Comma-separated list in the file; repeated or comma-separated flags.
    pub fn list<T>(&mut self, key: &str, flag: Vec<T>) -> Result<Vec<T>, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        let v = if !flag.is_empty() {
            flag
        } else if let Some(s) = self.file.get(key) {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().map_err(|e| Failure::usage(format!("config key {key}: cannot parse {t:?}: {e}"))))
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };
        self.record(key, &v);
        Ok(v)
    }

    /// Fails on file keys the command never asked for; returns the echo.
    pub fn finish(self) -> Result<BTreeMap<String, Value>, Failure> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(Failure::usage(format!("unknown config keys for this command: {unknown:?}")));
        }
        Ok(self.echo)
    }
}
