//! Optional `key = value` configuration file. Values fill in flags the
//! user did not pass; explicit flags always win.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {}", path.display(), e)))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`, got `{}`",
                    lineno + 1,
                    raw
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config `{} = {}` is not a number", key, v))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config `{} = {}` is not an integer", key, v))
            }),
        }
    }

    pub fn get_string(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }
}

/// flag > config > default
pub fn resolve_f64(
    flag: Option<f64>,
    config: Result<Option<f64>, CliError>,
    default: f64,
) -> Result<f64, CliError> {
    Ok(flag.or(config?).unwrap_or(default))
}

pub fn resolve_usize(
    flag: Option<usize>,
    config: Result<Option<usize>, CliError>,
    default: usize,
) -> Result<usize, CliError> {
    Ok(flag.or(config?).unwrap_or(default))
}

pub fn resolve_string(flag: Option<String>, config: Option<String>, default: &str) -> String {
    flag.or(config).unwrap_or_else(|| default.to_string())
}
