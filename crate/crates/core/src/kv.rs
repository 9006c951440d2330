//! Plain `key = value` configuration blocks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Ordered key-value block. Lines are `key = value`; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvBlock {
    entries: BTreeMap<String, String>,
}

impl KvBlock {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.replace('_', "-"), value.to_string());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(&key.replace('_', "-"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&key.replace('_', "-")).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("`{key}`: not a number: {v}"))))
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x <= u64::MAX as f64)
                    .map(|x| x as u64)
                    .ok_or_else(|| Error::Config(format!("`{key}`: not a non-negative integer: {v}")))
            })
            .transpose()
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("`{key}`: bad list item {s}"))))
                    .collect()
            })
            .transpose()
    }

    pub fn merge_from(&mut self, other: &KvBlock) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let kv = KvBlock::parse("# spine\nalpha = 1.5\ntail_const=1 # c\n\nn = 200, 400\n").unwrap();
        assert_eq!(kv.f64("alpha").unwrap(), Some(1.5));
        assert_eq!(kv.f64("tail-const").unwrap(), Some(1.0));
        assert_eq!(kv.f64_list("n").unwrap(), Some(vec![200.0, 400.0]));
        assert_eq!(KvBlock::parse(&kv.render()).unwrap(), kv);
        assert!(KvBlock::parse("oops").is_err());
        assert!(kv.u64("alpha").is_err());
    }
}
