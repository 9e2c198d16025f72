//! Structured-text sidecar files describing raw binary payloads.
//!
//! A sidecar is a plain `key = value` text file next to a `.raw` payload.
//! Values are whitespace-separated tokens; `#` starts a comment line.
//! The schema (which keys, what types) is fixed by each payload kind:
//! volumes and masks use `dims`, `spacing_mm`, `origin_mm`, `dtype`;
//! heat-map stacks use `count`, `width`, `height`, `dtype`; radiographs
//! use `width`, `height`, `dtype`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Parsed sidecar content. Keys are unique; duplicates are a parse error.
#[derive(Debug, Clone, Default)]
pub struct Sidecar {
    entries: BTreeMap<String, String>,
}

impl Sidecar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn set_triple(&mut self, key: &str, v: (f64, f64, f64)) {
        self.entries.insert(key.to_string(), format!("{} {} {}", v.0, v.1, v.2));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::parse(None, format!("missing sidecar key `{key}`")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::parse(None, format!("sidecar key `{key}` is not an integer")))
    }

    pub fn require_usize_triple(&self, key: &str) -> Result<(usize, usize, usize)> {
        let v = self.require(key)?;
        let parts: Vec<usize> = v.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if parts.len() != 3 {
            return Err(Error::parse(None, format!("sidecar key `{key}` needs three integers")));
        }
        Ok((parts[0], parts[1], parts[2]))
    }

    pub fn require_f64_triple(&self, key: &str) -> Result<(f64, f64, f64)> {
        let v = self.require(key)?;
        let parts: Vec<f64> = v.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if parts.len() != 3 {
            return Err(Error::parse(None, format!("sidecar key `{key}` needs three numbers")));
        }
        Ok((parts[0], parts[1], parts[2]))
    }

    pub fn parse_str(text: &str, origin: Option<&Path>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(
                    origin.map(Path::to_path_buf),
                    format!("line {}: expected `key = value`", lineno + 1),
                ));
            };
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::parse(
                    origin.map(Path::to_path_buf),
                    format!("duplicate sidecar key `{key}`"),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, Some(path))
    }

    /// Serializes keys in sorted order so reruns are byte-identical.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Sidecar path for a raw payload: the `.raw` extension replaced by `.meta`,
/// so `vol.raw` pairs with `vol.meta` and `vol.mask.raw` with `vol.mask.meta`.
pub fn sidecar_path(raw_path: &Path) -> PathBuf {
    raw_path.with_extension("meta")
}
