//! Text checkpoints: a versioned header, the resolved config as
//! `key = value` lines, then each parameter as `PARAM name rows cols`
//! followed by one line of values per row.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::params::ParamStore;
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "DEFT-CKPT v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: Vec<(String, String)>,
    pub params: Vec<(String, Array2<f64>)>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, config: Vec<(String, String)>) -> Self {
        let params = store
            .ids()
            .map(|id| (store.name(id).to_string(), store.value(id).clone()))
            .collect();
        Self { config, params }
    }

    /// Copies values into a store with exactly the same names and shapes.
    pub fn restore_into(&self, store: &mut ParamStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} parameters, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        for (name, value) in &self.params {
            let id = store
                .get(name)
                .ok_or_else(|| Error::Config(format!("model has no parameter {name}")))?;
            store.set(id, value.clone())?;
        }
        Ok(())
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{CHECKPOINT_HEADER}").unwrap();
        writeln!(out, "CONFIG {}", self.config.len()).unwrap();
        for (k, v) in &self.config {
            writeln!(out, "{k} = {v}").unwrap();
        }
        writeln!(out, "PARAMS {}", self.params.len()).unwrap();
        for (name, value) in &self.params {
            writeln!(out, "PARAM {name} {} {}", value.nrows(), value.ncols()).unwrap();
            for row in value.rows() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        out.push_str("END\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| {
                Error::parse(0, format!("unexpected end of checkpoint, expected {what}"))
            })
        };
        let (ln, header) = next("header")?;
        if header.trim() != CHECKPOINT_HEADER {
            return Err(Error::parse(ln, format!("expected `{CHECKPOINT_HEADER}`")));
        }
        let count = |ln: usize, line: &str, tag: &str| -> Result<usize> {
            line.strip_prefix(tag)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| Error::parse(ln, format!("expected `{tag}<count>`")))
        };
        let (ln, line) = next("CONFIG")?;
        let n_config = count(ln, line, "CONFIG ")?;
        let mut config = Vec::with_capacity(n_config);
        for _ in 0..n_config {
            let (ln, line) = next("config entry")?;
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::parse(ln, "expected `key = value`"))?;
            config.push((k.to_string(), v.to_string()));
        }
        let (ln, line) = next("PARAMS")?;
        let n_params = count(ln, line, "PARAMS ")?;
        let mut params = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let (ln, line) = next("PARAM")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let (name, rows, cols) = match fields.as_slice() {
                ["PARAM", name, r, c] => (
                    name.to_string(),
                    r.parse::<usize>()
                        .map_err(|_| Error::parse(ln, "bad row count"))?,
                    c.parse::<usize>()
                        .map_err(|_| Error::parse(ln, "bad column count"))?,
                ),
                _ => return Err(Error::parse(ln, "expected `PARAM name rows cols`")),
            };
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ln, line) = next("parameter row")?;
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(ln, format!("bad value: {e}")))?;
                if row.len() != cols {
                    return Err(Error::parse(
                        ln,
                        format!("expected {cols} values, got {}", row.len()),
                    ));
                }
                values.extend(row);
            }
            let value = Array2::from_shape_vec((rows, cols), values).expect("counted");
            params.push((name, value));
        }
        let (ln, line) = next("END")?;
        if line.trim() != "END" {
            return Err(Error::parse(ln, "expected END"));
        }
        Ok(Self { config, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_is_exact() {
        let mut store = ParamStore::new();
        store
            .add("a.w", array![[0.1, -1.0 / 3.0], [1e-300, 6.02e23]])
            .unwrap();
        store.add("b", array![[std::f64::consts::PI]]).unwrap();
        let ck = Checkpoint::from_store(&store, vec![("hidden_dim".into(), "32".into())]);
        let back = Checkpoint::parse(&ck.to_text()).unwrap();
        assert_eq!(back, ck);
        let mut other = store.clone();
        other.value_mut(other.get("b").unwrap()).fill(0.0);
        back.restore_into(&mut other).unwrap();
        assert_eq!(other, store);
        assert_eq!(back.config_value("hidden_dim"), Some("32"));
    }

    #[test]
    fn bad_header_and_truncation() {
        assert!(matches!(
            Checkpoint::parse("nope\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = "DEFT-CKPT v1\nCONFIG 0\nPARAMS 1\nPARAM w 2 1\n1.0\n";
        assert!(Checkpoint::parse(text).is_err());
    }
}
