//! Experiment configuration: flat `key = value` text with dotted key paths.
//!
//! ```text
//! # two-point environment law on a binary tree
//! law.a.kind = finite
//! law.a.values = 0.5 2
//! law.a.probs = 0.5 0.5
//! law.offspring.counts = 2
//! law.offspring.probs = 1
//! walk.steps = 100000
//! seed = 42
//! ```
//!
//! Lines are `key = value` with `#` comments; values are scalars or
//! space-separated lists. Keys are validated against the set a command
//! understands, so typos fail loudly with the line and field named.

use std::collections::BTreeMap;

use rwre_core::law::{ALaw, OffspringLaw};

use crate::error::{HarnessError, Result};

/// Parsed configuration: ordered key/value pairs plus source line numbers
/// for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    lines: BTreeMap<String, usize>,
}

pub fn parse_config(text: &str) -> Result<Config> {
    let mut config = Config::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Config {
                line: Some(line_no),
                field: None,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(HarnessError::Config {
                line: Some(line_no),
                field: None,
                message: "empty key".into(),
            });
        }
        if !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_')
        {
            return Err(HarnessError::Config {
                line: Some(line_no),
                field: Some(key.to_string()),
                message: "keys may contain only alphanumerics, dots and underscores".into(),
            });
        }
        if config.values.contains_key(key) {
            return Err(HarnessError::Config {
                line: Some(line_no),
                field: Some(key.to_string()),
                message: format!(
                    "duplicate key (first defined on line {})",
                    config.lines[key]
                ),
            });
        }
        config.values.insert(key.to_string(), value.to_string());
        config.lines.insert(key.to_string(), line_no);
    }
    Ok(config)
}

impl Config {
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn field_error(&self, key: &str, message: impl Into<String>) -> HarnessError {
        HarnessError::Config {
            line: self.lines.get(key).copied(),
            field: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn get_str(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| self.field_error(key, "missing required key"))
    }

    pub fn get_str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.values.get(key).map(String::as_str).unwrap_or(default)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.parse_scalar(self.get_str(key)?, key)
    }

    pub fn get_f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.values.get(key) {
            Some(_) => self.get_f64(key),
            None => Ok(default),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        let raw = self.get_str(key)?;
        raw.parse::<u64>()
            .map_err(|_| self.field_error(key, format!("expected an unsigned integer, got `{raw}`")))
    }

    pub fn get_u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.values.get(key) {
            Some(_) => self.get_u64(key),
            None => Ok(default),
        }
    }

    pub fn get_usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_u64_or(key, default as u64)? as usize)
    }

    pub fn get_bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(self.field_error(key, format!("expected true|false, got `{other}`"))),
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get_str(key)?;
        raw.split_whitespace()
            .map(|tok| self.parse_scalar(tok, key))
            .collect()
    }

    pub fn get_usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| {
                        self.field_error(key, format!("expected an unsigned integer, got `{tok}`"))
                    })
                })
                .collect(),
        }
    }

    fn parse_scalar(&self, token: &str, key: &str) -> Result<f64> {
        let value: f64 = token
            .parse()
            .map_err(|_| self.field_error(key, format!("expected a number, got `{token}`")))?;
        if !value.is_finite() {
            return Err(self.field_error(key, format!("non-finite value `{token}`")));
        }
        Ok(value)
    }

    /// Reject keys outside the allowed set; prefixes ending in `.` admit any
    /// suffix.
    pub fn validate_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            let ok = allowed
                .iter()
                .any(|pat| pat.strip_suffix('.').map_or(key == *pat, |p| key.starts_with(p)));
            if !ok {
                return Err(self.field_error(key, "unknown key for this command"));
            }
        }
        Ok(())
    }

    /// Build the environment-mark law from the `law.a.*` keys.
    pub fn a_law(&self) -> Result<ALaw> {
        match self.get_str("law.a.kind")? {
            "finite" => {
                let values = self.get_f64_list("law.a.values")?;
                let probs = self.get_f64_list("law.a.probs")?;
                if values.len() != probs.len() {
                    return Err(self.field_error(
                        "law.a.probs",
                        format!("{} probabilities for {} values", probs.len(), values.len()),
                    ));
                }
                let default_alpha = values
                    .iter()
                    .fold(1.0f64, |acc, &v| acc.max(v).max(if v > 0.0 { 1.0 / v } else { acc }));
                let alpha = self.get_f64_or("law.a.alpha", default_alpha)?;
                let atoms: Vec<(f64, f64)> =
                    values.into_iter().zip(probs).collect();
                ALaw::finite(&atoms, alpha)
                    .map_err(|e| self.field_error("law.a.values", e.to_string()))
            }
            "uniform" => {
                let lo = self.get_f64("law.a.lo")?;
                let hi = self.get_f64("law.a.hi")?;
                ALaw::uniform(lo, hi).map_err(|e| self.field_error("law.a.lo", e.to_string()))
            }
            other => Err(self.field_error(
                "law.a.kind",
                format!("unknown law kind `{other}` (expected finite|uniform)"),
            )),
        }
    }

    /// Build the offspring law from `law.offspring.*`: `counts` lists the
    /// offspring numbers carrying mass, `probs` their probabilities.
    pub fn offspring_law(&self) -> Result<OffspringLaw> {
        let counts = self.get_f64_list("law.offspring.counts")?;
        let probs = self.get_f64_list("law.offspring.probs")?;
        if counts.len() != probs.len() {
            return Err(self.field_error(
                "law.offspring.probs",
                format!("{} probabilities for {} counts", probs.len(), counts.len()),
            ));
        }
        let mut dense: Vec<f64> = Vec::new();
        for (&k, &p) in counts.iter().zip(&probs) {
            if k < 1.0 || k.fract() != 0.0 || k > 64.0 {
                return Err(self.field_error(
                    "law.offspring.counts",
                    format!("offspring count `{k}` must be an integer in 1..=64"),
                ));
            }
            let idx = k as usize - 1;
            if dense.len() <= idx {
                dense.resize(idx + 1, 0.0);
            }
            dense[idx] += p;
        }
        OffspringLaw::new(&dense)
            .map_err(|e| self.field_error("law.offspring.probs", e.to_string()))
    }

    pub fn seed(&self, override_seed: Option<u64>) -> Result<u64> {
        match override_seed {
            Some(s) => Ok(s),
            None => self.get_u64_or("seed", 0),
        }
    }
}

pub const LAW_KEYS: &[&str] = &[
    "law.a.kind",
    "law.a.values",
    "law.a.probs",
    "law.a.alpha",
    "law.a.lo",
    "law.a.hi",
    "law.offspring.counts",
    "law.offspring.probs",
    "seed",
];
