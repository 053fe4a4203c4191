//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Each consumer claims the keys it
//! knows through [`Configurable::set`]; anything left unclaimed is an error.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// `(key, value, line)` in file order.
    pub entries: Vec<(String, String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if let Some((_, _, first)) = entries.iter().find(|(ek, _, _)| ek == k) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{k}` (first on line {first})",
                    i + 1
                )));
            }
            entries.push((k.to_string(), v.to_string(), i + 1));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Offers every entry to `targets` in turn; fails on the first key no
    /// target recognizes.
    pub fn apply(&self, targets: &mut [&mut dyn Configurable]) -> Result<()> {
        'entries: for (k, v, line) in &self.entries {
            for t in targets.iter_mut() {
                if t.set(k, v)
                    .map_err(|e| Error::Config(format!("line {line}: {}", strip(e))))?
                {
                    continue 'entries;
                }
            }
            return Err(Error::Config(format!("line {line}: unknown key `{k}`")));
        }
        Ok(())
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// Something settable from flat string pairs and printable back to them.
pub trait Configurable {
    /// Returns `Ok(false)` for keys this type does not own.
    fn set(&mut self, key: &str, value: &str) -> Result<bool>;
    /// Every owned key with its current value, in a stable order.
    fn entries(&self) -> Vec<(String, String)>;
}

pub fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("invalid value `{value}` for `{key}`: {e}")))
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean `{value}` for `{key}`"
        ))),
    }
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_value::<f64>(key, s.trim()))
        .collect()
}

pub fn format_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Looks `value` up in a name table.
pub fn one_of<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::Config(format!(
                "`{key}` must be one of {}, got `{value}`",
                names.join("|")
            ))
        })
}

pub fn name_of<T: Copy + PartialEq>(v: T, options: &[(&'static str, T)]) -> &'static str {
    options
        .iter()
        .find(|(_, o)| *o == v)
        .map(|(n, _)| *n)
        .expect("listed")
}

/// Renders `key = value` lines.
pub fn render(entries: &[(String, String)]) -> String {
    entries
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Probe {
        a: usize,
    }

    impl Configurable for Probe {
        fn set(&mut self, key: &str, value: &str) -> Result<bool> {
            match key {
                "a" => self.a = parse_value(key, value)?,
                _ => return Ok(false),
            }
            Ok(true)
        }
        fn entries(&self) -> Vec<(String, String)> {
            vec![("a".into(), self.a.to_string())]
        }
    }

    #[test]
    fn parses_comments_and_blank_lines() {
        let f = ConfigFile::parse("# c\n\na = 3  # trailing\n").unwrap();
        let mut p = Probe::default();
        f.apply(&mut [&mut p]).unwrap();
        assert_eq!(p.a, 3);
    }

    #[test]
    fn errors() {
        assert!(ConfigFile::parse("a 3\n").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2\n").is_err());
        let mut p = Probe::default();
        let e = ConfigFile::parse("b = 1\n")
            .unwrap()
            .apply(&mut [&mut p])
            .unwrap_err();
        assert!(e.to_string().contains("unknown key `b`"), "{e}");
        let e = ConfigFile::parse("\na = x\n")
            .unwrap()
            .apply(&mut [&mut p])
            .unwrap_err();
        assert!(e.is_config() && e.to_string().contains("line 2"), "{e}");
    }
}
