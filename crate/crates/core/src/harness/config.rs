//! Flat run configuration. Later layers override earlier ones: profile
//! defaults, then a TOML config file, then `key=value` command-line settings.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Profile,
    User,
}

#[derive(Debug, Default)]
pub struct KvConfig {
    values: BTreeMap<String, (String, Origin)>,
    used: RefCell<BTreeSet<String>>,
}

/// Flattens one TOML value to the string form the typed getters parse;
/// arrays become comma-separated lists.
fn scalar(key: &str, v: &toml::Value) -> Result<String> {
    use toml::Value;
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(b) => Ok(b.to_string()),
        Value::Array(items) => {
            let parts = items.iter().map(|i| scalar(key, i)).collect::<Result<Vec<_>>>()?;
            Ok(parts.join(","))
        }
        _ => Err(Error::InvalidConfig(format!("{key}: expected a scalar or a list"))),
    }
}

impl KvConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_default(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_owned(), (value.to_string(), Origin::Profile));
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_owned(), (value.to_string(), Origin::User));
    }

    /// Reads a TOML file of top-level keys.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        for (k, v) in &table {
            let v = scalar(k, v)?;
            self.set(k, v);
        }
        Ok(())
    }

    /// Applies a `key=value` command-line setting.
    pub fn apply_setting(&mut self, setting: &str) -> Result<()> {
        match setting.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() && !k.trim().contains(char::is_whitespace) => {
                self.set(k.trim(), v.trim());
                Ok(())
            }
            _ => Err(Error::InvalidConfig(format!("expected key=value, got {setting:?}"))),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_owned());
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{key} = {v:?} is not a valid value"))),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("{key} = {v:?} is not a valid value"))),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_owned()
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) if v.trim().is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("{key}: bad list item {s:?}")))
                })
                .collect(),
        }
    }

    /// Fails on user-supplied keys that no part of the command read.
    pub fn reject_unknown(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .iter()
            .filter(|(k, (_, o))| *o == Origin::User && !used.contains(*k))
            .map(|(k, _)| k.as_str())
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_toml_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "# header\nclasses = 4\nteacher = \"learned\"\nsizes = [100, 200]\nwhiten = true\nnoise = 0.25\n").unwrap();
        let mut c = KvConfig::new();
        c.load_file(&path).unwrap();
        assert_eq!(c.get("classes", 0usize).unwrap(), 4);
        assert_eq!(c.string("teacher", ""), "learned");
        assert_eq!(c.list::<usize>("sizes", &[]).unwrap(), vec![100, 200]);
        assert!(c.get("whiten", false).unwrap());
        assert_eq!(c.get("noise", 0.0).unwrap(), 0.25);
        fs::write(&path, "[section]\nk = 1\n").unwrap();
        assert!(KvConfig::new().load_file(&path).is_err());
        fs::write(&path, "k = \n").unwrap();
        assert!(KvConfig::new().load_file(&path).is_err());
        assert!(c.apply_setting("novalue").is_err());
        assert!(c.apply_setting("two words=1").is_err());
    }

    #[test]
    fn layering_and_typed_reads() {
        let mut c = KvConfig::new();
        c.set_default("k", 5);
        c.set_default("unused_default", 1);
        assert_eq!(c.get("k", 0usize).unwrap(), 5);
        c.apply_setting("k=7").unwrap();
        assert_eq!(c.get("k", 0usize).unwrap(), 7);
        assert_eq!(c.get("missing", 2.5).unwrap(), 2.5);
        c.set("bad", "x");
        assert!(c.get::<f64>("bad", 0.0).is_err());
        c.set("xs", "1, 2,3");
        assert_eq!(c.list::<u32>("xs", &[]).unwrap(), vec![1, 2, 3]);
        c.reject_unknown().unwrap();
    }

    #[test]
    fn unknown_user_keys_rejected() {
        let mut c = KvConfig::new();
        c.set("typo_key", 1);
        let err = c.reject_unknown().unwrap_err().to_string();
        assert!(err.contains("typo_key"));
    }
}
