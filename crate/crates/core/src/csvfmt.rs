//! Locale-free CSV output with a fixed number of significant digits, and a
//! strict reader.

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 8;
/// Precision of filter-response tables.
pub const RESPONSE_DIGITS: usize = 12;

/// `x` rounded to 8 significant digits.
pub fn format_value(x: f64) -> String {
    format_digits(x, SIGNIFICANT_DIGITS)
}

/// `x` rounded to `digits` significant digits, fixed notation for moderate
/// magnitudes, trailing zeros removed.
pub fn format_digits(x: f64, digits: usize) -> String {
    assert!(digits >= 1, "at least one significant digit");
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (_, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let fixed = format!("{x:.decimals$}");
    if fixed.contains('.') {
        fixed
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        fixed
    }
}

/// A header plus rows of raw fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| format_value(v)).collect());
    }

    pub fn push_values_with(&mut self, row: &[f64], digits: usize) {
        self.push(row.iter().map(|&v| format_digits(v, digits)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Rejects `\r`, ragged rows, empty fields and a missing trailing newline.
    pub fn parse_strict(text: &str) -> Result<Self> {
        if text.contains('\r') {
            return Err(Error::parse(1, "carriage return in csv"));
        }
        let Some(body) = text.strip_suffix('\n') else {
            return Err(Error::parse(1, "csv must end with a newline"));
        };
        let mut lines = body.split('\n');
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty csv"))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let fields: Vec<String> = line.split(',').map(str::to_string).collect();
            if fields.len() != header.len() {
                return Err(Error::parse(
                    k + 2,
                    format!("{} fields, header has {}", fields.len(), header.len()),
                ));
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::parse(k + 2, "empty field"));
            }
            rows.push(fields);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Argument(format!("no column `{name}`")))
    }

    /// Values of column `name` parsed as reals.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                r[c].parse::<f64>()
                    .map_err(|_| Error::parse(k + 2, format!("non-numeric `{}`", r[c])))
            })
            .collect()
    }
}
