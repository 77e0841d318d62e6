//! `key=value` configuration files. Values fill in for flags the user did
//! not pass on the command line; explicit flags always win.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("config {path:?}: {e}"))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    /// Flag value if given, else the config entry, else the default.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(s) => s.parse().map_err(|e| format!("config key {key}: {e}")),
            None => Ok(default),
        }
    }

    /// Same, but with no default: `None` when neither source provides it.
    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(s) => s.parse().map(Some).map_err(|e| format!("config key {key}: {e}")),
            None => Ok(None),
        }
    }
}
