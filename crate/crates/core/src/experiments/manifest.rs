use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Manifest format understood by this build.
pub const MANIFEST_VERSION: u32 = 1;

/// Plain-text `key = value` experiment description.
///
/// Blank lines and lines starting with `#` are ignored; trailing `# ...`
/// comments are stripped. `version` and `kind` are required. Lists are
/// comma separated.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
    text: String,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Manifest(msg.into())
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(bad(format!("line {}: empty key", n + 1)));
            }
            if entries
                .insert(k.to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(bad(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        let m = Self {
            entries,
            text: text.to_string(),
        };
        let version: u32 = m.require("version")?;
        if version != MANIFEST_VERSION {
            return Err(bad(format!(
                "unsupported version {version} (expected {MANIFEST_VERSION})"
            )));
        }
        m.require::<String>("kind")?;
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Build from pairs; `version` is filled in.
    pub fn from_pairs(kind: &str, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut text = format!("version = {MANIFEST_VERSION}\nkind = {kind}\n");
        for (k, v) in pairs {
            text.push_str(&format!("{k} = {v}\n"));
        }
        Self::parse(&text)
    }

    pub fn kind(&self) -> &str {
        &self.entries["kind"]
    }

    /// The original text, written next to every output as a manifest copy.
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| bad(format!("`{key}`: cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| bad(format!("missing required key `{key}`")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        let x = x.trim();
                        x.parse::<T>()
                            .map_err(|e| bad(format!("`{key}`: cannot parse `{x}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        Ok(self.list(key)?.unwrap_or(default))
    }

    /// Reject keys outside `allowed` (plus `version`, `kind`).
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if k != "version" && k != "kind" && !allowed.contains(&k.as_str()) {
                return Err(bad(format!("unknown key `{k}` for kind `{}`", self.kind())));
            }
        }
        Ok(())
    }
}
