//! Flat TOML configuration. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use toml::Value;

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if matches!(value, Value::Table(_) | Value::Array(_)) {
                bail!("config key `{key}` must be a plain value");
            }
            values.insert(key.replace('-', "_"), value);
        }
        Ok(Config { values })
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => bail!("config key `{key}` must be a non-negative integer, got {v}"),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => bail!("config key `{key}` must be a number, got {v}"),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => bail!("config key `{key}` must be true or false, got {v}"),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => bail!("config key `{key}` must be a string, got {v}"),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(PathBuf::from))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_values() {
        let c = Config::parse("seed = 7\nrate-limit = 2.5\nlive = true\nfixtures = \"dir\"").unwrap();
        assert_eq!(c.u64("seed").unwrap(), Some(7));
        assert_eq!(c.f64("rate_limit").unwrap(), Some(2.5));
        assert_eq!(c.bool("live").unwrap(), Some(true));
        assert_eq!(c.path("fixtures").unwrap(), Some(PathBuf::from("dir")));
        assert_eq!(c.u64("missing").unwrap(), None);
        assert!(c.u64("fixtures").is_err());
    }

    #[test]
    fn nested_rejected() {
        assert!(Config::parse("[section]\na = 1").is_err());
    }
}
