use std::collections::BTreeMap;

use ndarray::Array2;

use super::SparseMatrix;
use crate::error::{Error, Result};

/// Edge classes keyed by `(min(u, v), max(u, v))`.
pub type EdgeLabels = BTreeMap<(usize, usize), usize>;

/// One undirected, weighted graph observation with node features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSnapshot {
    adjacency: SparseMatrix,
    features: Array2<f64>,
    timestep: usize,
    edge_labels: Option<EdgeLabels>,
    node_labels: Option<Vec<usize>>,
}

impl GraphSnapshot {
    /// Wraps an adjacency matrix, enforcing symmetry, non-negative weights,
    /// no self-loops and a matching feature row count.
    pub fn new(adjacency: SparseMatrix, features: Array2<f64>, timestep: usize) -> Result<Self> {
        let n = adjacency.n_rows();
        if adjacency.n_cols() != n {
            return Err(Error::Graph("adjacency must be square".into()));
        }
        if features.nrows() != n {
            return Err(Error::Graph(format!(
                "{} feature rows for {} nodes",
                features.nrows(),
                n
            )));
        }
        for (r, c, w) in adjacency.to_edge_list() {
            if r == c {
                return Err(Error::Graph(format!("self-loop at node {r}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Graph(format!("invalid weight {w} on ({r}, {c})")));
            }
        }
        if !adjacency.is_symmetric(0.0) {
            return Err(Error::Graph("adjacency is not symmetric".into()));
        }
        Ok(Self {
            adjacency,
            features,
            timestep,
            edge_labels: None,
            node_labels: None,
        })
    }

    /// Builds a snapshot from undirected edges, each listed once.
    pub fn from_edges(
        n_nodes: usize,
        edges: &[(usize, usize, f64)],
        features: Array2<f64>,
        timestep: usize,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(edges.len() * 2);
        for &(u, v, w) in edges {
            entries.push((u, v, w));
            entries.push((v, u, w));
        }
        let adjacency = SparseMatrix::from_edge_list(n_nodes, n_nodes, &entries)?;
        Self::new(adjacency, features, timestep)
    }

    pub fn with_edge_labels(mut self, labels: EdgeLabels) -> Result<Self> {
        for &(u, v) in labels.keys() {
            if u > v || self.adjacency.get(u, v).is_none() {
                return Err(Error::Graph(format!("edge label on non-edge ({u}, {v})")));
            }
        }
        self.edge_labels = Some(labels);
        Ok(self)
    }

    pub fn with_node_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_nodes() {
            return Err(Error::Graph(format!(
                "{} node labels for {} nodes",
                labels.len(),
                self.n_nodes()
            )));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn timestep(&self) -> usize {
        self.timestep
    }

    pub fn edge_labels(&self) -> Option<&EdgeLabels> {
        self.edge_labels.as_ref()
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n_rows()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Undirected edges `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .to_edge_list()
            .into_iter()
            .filter(|&(u, v, _)| u < v)
            .collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n_nodes() && v < self.n_nodes() && self.adjacency.get(u, v).is_some()
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency.row(i).1.iter().sum()
    }

    pub fn max_degree(&self) -> f64 {
        (0..self.n_nodes())
            .map(|i| self.degree(i))
            .fold(0.0, f64::max)
    }

    /// Copy with every edge weight set to 1.
    pub fn binarized(&self) -> Self {
        let mut out = self.clone();
        out.adjacency = self.adjacency.map_values(|_, _, _| 1.0);
        out
    }
}

/// Index of the last timestep (exclusive) in each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub train_end: usize,
    pub val_end: usize,
    pub test_end: usize,
}

impl Split {
    /// 70/10/20 split of `t` snapshots, with at least one training snapshot.
    pub fn proportional(t: usize) -> Self {
        let train_end = ((t as f64 * 0.7).round() as usize).clamp(1, t.max(1));
        let val_end = ((t as f64 * 0.8).round() as usize).clamp(train_end, t.max(1));
        Self {
            train_end,
            val_end,
            test_end: t,
        }
    }
}

/// Time-ordered snapshots over a fixed node universe.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGraph {
    snapshots: Vec<GraphSnapshot>,
    n_nodes: usize,
    split: Split,
}

impl DynamicGraph {
    pub fn new(snapshots: Vec<GraphSnapshot>, split: Split) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::Graph("dynamic graph needs at least one snapshot".into()))?;
        let n_nodes = first.n_nodes();
        let dim = first.feature_dim();
        for w in snapshots.windows(2) {
            if w[1].timestep() <= w[0].timestep() {
                return Err(Error::Graph(
                    "snapshot timesteps must strictly increase".into(),
                ));
            }
        }
        if let Some(s) = snapshots
            .iter()
            .find(|s| s.n_nodes() != n_nodes || s.feature_dim() != dim)
        {
            return Err(Error::Graph(format!(
                "snapshot {} has {} nodes / {} features, expected {} / {}",
                s.timestep(),
                s.n_nodes(),
                s.feature_dim(),
                n_nodes,
                dim
            )));
        }
        let Split {
            train_end,
            val_end,
            test_end,
        } = split;
        if !(0 < train_end && train_end <= val_end && val_end <= test_end)
            || test_end != snapshots.len()
        {
            return Err(Error::Graph(format!(
                "invalid split {train_end}/{val_end}/{test_end} for {} snapshots",
                snapshots.len()
            )));
        }
        Ok(Self {
            snapshots,
            n_nodes,
            split,
        })
    }

    pub fn snapshots(&self) -> &[GraphSnapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &GraphSnapshot {
        &self.snapshots[t]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn feature_dim(&self) -> usize {
        self.snapshots[0].feature_dim()
    }

    pub fn split(&self) -> Split {
        self.split
    }
}

/// Neighbors of node `i` with edge weights, ascending by node index.
pub fn neighbors(g: &GraphSnapshot, i: usize) -> Result<Vec<(usize, f64)>> {
    if i >= g.n_nodes() {
        return Err(Error::Index {
            index: i,
            len: g.n_nodes(),
        });
    }
    let (cols, vals) = g.adjacency().row(i);
    Ok(cols.iter().copied().zip(vals.iter().copied()).collect())
}
