use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

/// Handle to a named parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    name: String,
    value: Array2<f64>,
    grad: Array2<f64>,
}

/// Named trainable matrices with accumulated gradients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<Entry>,
    by_name: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Argument(format!("duplicate parameter name {name}")));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter init"));
        }
        let id = self.entries.len();
        self.by_name.insert(name.clone(), id);
        self.entries.push(Entry {
            name,
            grad: Array2::zeros(value.raw_dim()),
            value,
        });
        Ok(ParamId(id))
    }

    /// Glorot-uniform init: `U(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))`.
    pub fn glorot(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut impl Rng,
    ) -> Result<ParamId> {
        self.add(name, glorot_uniform(rows, cols, rng))
    }

    pub fn zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> Result<ParamId> {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn get(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Array2<f64> {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.entries[id.0].value
    }

    /// Replaces a value, keeping the shape.
    pub fn set(&mut self, id: ParamId, value: Array2<f64>) -> Result<()> {
        let e = &mut self.entries[id.0];
        if e.value.dim() != value.dim() {
            return Err(Error::shape(
                "ParamStore::set",
                format!("{} is {:?}, got {:?}", e.name, e.value.dim(), value.dim()),
            ));
        }
        e.value = value;
        Ok(())
    }

    pub fn grad(&self, id: ParamId) -> &Array2<f64> {
        &self.entries[id.0].grad
    }

    pub(crate) fn grad_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.entries[id.0].grad
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.fill(0.0);
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalars across all parameters.
    pub fn n_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn grad_norm(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.grad.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_are_unique() {
        let mut s = ParamStore::new();
        s.zeros("w", 2, 2).unwrap();
        assert!(s.zeros("w", 1, 1).is_err());
        assert_eq!(s.get("w"), Some(ParamId(0)));
        assert_eq!(s.n_scalars(), 4);
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = glorot_uniform(30, 10, &mut rng);
        let b = (6.0f64 / 40.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= b));
        assert!(w.iter().any(|v| v.abs() > b / 2.0));
    }
}
