//! `key = value` configuration files and their merge with flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use magnetotunnel::setup::Constants;
use magnetotunnel::PhysicalSetup;
use serde::Serialize;

pub const KEYS: [&str; 7] = ["energy", "mass", "charge", "a", "H", "u0", "N"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Natural,
    Gaussian,
    Si,
}

impl Units {
    pub fn constants(self) -> Constants {
        match self {
            Units::Natural => Constants::NATURAL,
            Units::Gaussian => Constants::GAUSSIAN,
            Units::Si => Constants::SI,
        }
    }
}

/// Parses `key = value` lines. `#` starts a comment, blank lines and
/// `[section]` headers are ignored, and repeated or unknown keys are errors.
pub fn parse_ini(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected `key = value`", n + 1))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            bail!("line {}: unknown key `{key}` (allowed: {})", n + 1, KEYS.join(", "));
        }
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("line {}: `{}` is not a number", n + 1, value.trim()))?;
        if out.insert(key.to_string(), value).is_some() {
            bail!("line {}: key `{key}` given twice", n + 1);
        }
    }
    Ok(out)
}

pub fn read_ini(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_ini(&text).with_context(|| format!("in {}", path.display()))
}

/// Physical parameters after merging the file with flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Physical {
    pub values: BTreeMap<String, f64>,
}

impl Physical {
    pub fn merge(file: BTreeMap<String, f64>, flags: &[(&str, Option<f64>)]) -> Self {
        let mut values = file;
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), *v);
            }
        }
        Self { values }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The full setup; every key except `H` is required. A missing `H` is
    /// reported as zero field.
    pub fn setup(&self, units: Units) -> Result<PhysicalSetup> {
        let get = |k: &str| -> Result<f64> {
            self.values
                .get(k)
                .copied()
                .with_context(|| format!("missing parameter `{k}` (config file or --{k})"))
        };
        let n = get("N")?;
        if n.fract() != 0.0 || n < 1.0 {
            bail!("N must be a positive integer, got {n}");
        }
        Ok(PhysicalSetup {
            energy: get("energy")?,
            mass: get("mass")?,
            charge: get("charge")?,
            wall_half_width: get("a")?,
            field: self.values.get("H").copied().unwrap_or(0.0),
            wall_strength: get("u0")?,
            wall_exponent: n as u32,
            constants: units.constants(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_sections_and_spacing() {
        let m = parse_ini("# header\n[setup]\nenergy = 2.5  # |E|\n  a=1e-1\n\nN = 4\n").unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m["energy"], 2.5);
        assert_eq!(m["a"], 0.1);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(parse_ini("field = 3").is_err());
        assert!(parse_ini("energy 3").is_err());
        assert!(parse_ini("energy = three").is_err());
        assert!(parse_ini("a = 1\na = 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let p = Physical::merge(parse_ini("a = 1\nH = 2").unwrap(), &[("a", Some(3.0)), ("mass", None)]);
        assert_eq!(p.values["a"], 3.0);
        assert_eq!(p.values["H"], 2.0);
        assert!(!p.values.contains_key("mass"));
    }
}
