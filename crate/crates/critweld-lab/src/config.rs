//! Flat key-value experiment configuration.
//!
//! The config file format is one `key = value` pair per line, `#` comments.
//! Every key must be known to the experiment (its defaults define the
//! schema); unknown keys are rejected before any sampling begins.

use crate::{LabError, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_defaults(defaults: &[(&str, &str)]) -> Self {
        let mut m = Self::new();
        for (k, v) in defaults {
            m.entries.insert((*k).to_string(), (*v).to_string());
        }
        m
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            m.entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(m)
    }

    /// Overlay `other` onto defaults, rejecting keys absent from the schema.
    pub fn merged_into(&self, schema: &KvMap) -> Result<KvMap> {
        let mut out = schema.clone();
        for (k, v) in &self.entries {
            if !schema.entries.contains_key(k) {
                return Err(LabError::Usage(format!(
                    "unknown config key '{k}' (known: {})",
                    schema.entries.keys().cloned().collect::<Vec<_>>().join(", ")
                )));
            }
            out.entries.insert(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn set(&mut self, k: &str, v: &str) {
        self.entries.insert(k.to_string(), v.to_string());
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.entries.iter()
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| LabError::Usage(format!("key '{key}': expected a number, got '{raw}'")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| LabError::Usage(format!("key '{key}': expected an integer, got '{raw}'")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| LabError::Usage(format!("key '{key}': expected numbers, got '{s}'")))
            })
            .collect()
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| LabError::Usage(format!("missing config key '{key}'")))
    }
}

/// Fully resolved run request.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub replicas: u64,
    pub workers: usize,
    pub params: KvMap,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_merge() {
        let schema = KvMap::from_defaults(&[("gamma", "1.0"), ("eps_j", "8")]);
        let user = KvMap::parse("# comment\n gamma = 1.5 \n").unwrap();
        let merged = user.merged_into(&schema).unwrap();
        assert_eq!(merged.f64("gamma").unwrap(), 1.5);
        assert_eq!(merged.u64("eps_j").unwrap(), 8);
        let bad = KvMap::parse("nope = 1").unwrap();
        assert!(bad.merged_into(&schema).is_err());
    }

    #[test]
    fn list_parsing() {
        let m = KvMap::parse("ladder = 1.8, 1.9, 1.95").unwrap();
        let schema = KvMap::from_defaults(&[("ladder", "")]);
        let merged = m.merged_into(&schema).unwrap();
        assert_eq!(merged.f64_list("ladder").unwrap(), vec![1.8, 1.9, 1.95]);
    }
}
