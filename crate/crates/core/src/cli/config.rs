//! Flat `key = value` run configuration, merged with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::dist::{parse_rational, to_f64, FiniteDistribution, Rational};
use crate::error::Error;

use super::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    // problem
    "p_s",
    "p_t",
    "m",
    "beta",
    "gamma",
    "source_atoms",
    "target_atoms",
    "source",
    "target",
    // bound
    "alpha1",
    "alpha2",
    "sigma2",
    "envelope",
    "c",
    "sup_loss",
    // grids
    "alpha1_grid",
    "alpha2_grid",
    "p_s_grid",
    "p_t_grid",
    "m_grid",
    "beta_grid",
    "gamma_grid",
    // run
    "output",
    "format",
    "seed",
    "n_samples",
    "mode",
    "workers",
];

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Merged settings: config-file entries overridden by explicit flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_text(text: &str) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            settings.set(key, value.trim())?;
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = normalize(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("unknown config key `{key}`")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn set_opt(&mut self, key: &str, value: &Option<String>) -> Result<(), CliError> {
        match value {
            Some(v) => self.set(key, v),
            None => Ok(()),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    fn bad(key: &str, err: impl std::fmt::Display) -> CliError {
        CliError::Usage(format!("invalid value for `{key}`: {err}"))
    }

    pub fn rational_or(&self, key: &str, default: &str) -> Result<Rational, CliError> {
        let text = self.get(key).unwrap_or(default);
        parse_rational(text).map_err(|e| Self::bad(key, e))
    }

    pub fn real_or(&self, key: &str, default: &str) -> Result<f64, CliError> {
        Ok(to_f64(&self.rational_or(key, default)?))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_count(v).map_err(|e| Self::bad(key, e)),
        }
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32, CliError> {
        let v = self.u64_or(key, default as u64)?;
        u32::try_from(v).map_err(|e| Self::bad(key, e))
    }

    pub fn rational_list_or(&self, key: &str, default: &str) -> Result<Vec<Rational>, CliError> {
        let text = self.get(key).unwrap_or(default);
        let list = parse_grid(text).map_err(|e| Self::bad(key, e))?;
        if list.is_empty() {
            return Err(Self::bad(key, "empty grid"));
        }
        Ok(list)
    }

    pub fn u32_list_or(&self, key: &str, default: &str) -> Result<Vec<u32>, CliError> {
        self.rational_list_or(key, default)?
            .into_iter()
            .map(|r| {
                if !r.is_integer() {
                    return Err(Self::bad(key, format!("{r} is not an integer")));
                }
                u32::try_from(r.to_integer()).map_err(|e| Self::bad(key, e))
            })
            .collect()
    }

    pub fn distribution(&self, key: &str) -> Result<Option<FiniteDistribution>, CliError> {
        self.get(key)
            .map(|v| FiniteDistribution::parse(v).map_err(|e| Self::bad(key, e)))
            .transpose()
    }
}

fn parse_count(text: &str) -> Result<u64, Error> {
    let r = parse_rational(text)?;
    if !r.is_integer() || r < Rational::from_integer(0.into()) {
        return Err(Error::ParseRational(text.to_string()));
    }
    u64::try_from(r.to_integer()).map_err(|_| Error::ParseRational(text.to_string()))
}

/// A comma-separated list whose items are rationals or `start:end:step` ranges.
pub fn parse_grid(text: &str) -> Result<Vec<Rational>, Error> {
    let inner = text.trim();
    let inner = inner.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(inner);
    let mut out = Vec::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_rational(single)?),
            [start, end, step] => {
                let (start, end, step) = (parse_rational(start)?, parse_rational(end)?, parse_rational(step)?);
                if step <= Rational::from_integer(0.into()) {
                    return Err(Error::ParseRational(item.to_string()));
                }
                let mut x = start;
                while x <= end {
                    out.push(x.clone());
                    x += &step;
                }
            }
            _ => return Err(Error::ParseRational(item.to_string())),
        }
    }
    Ok(out)
}
