use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Compressed sparse row matrix of `f64` values.
///
/// Column indices within a row are strictly increasing and every stored
/// entry is explicit, so two matrices compare equal only if they store the
/// same pattern and values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::Graph(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Graph(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != values.len() {
            return Err(Error::Graph("row_offsets must span [0, nnz]".into()));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if hi < lo {
                return Err(Error::Graph(format!("row_offsets decreasing at row {r}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::Graph(format!(
                    "column index out of range in row {r}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Graph(format!(
                    "column indices not strictly increasing in row {r}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` entries in any order.
    /// Duplicate coordinates are rejected.
    pub fn from_edge_list(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for (k, &(r, c, v)) in sorted.iter().enumerate() {
            if r >= n_rows {
                return Err(Error::Index {
                    index: r,
                    len: n_rows,
                });
            }
            if c >= n_cols {
                return Err(Error::Index {
                    index: c,
                    len: n_cols,
                });
            }
            if k > 0 && sorted[k - 1].0 == r && sorted[k - 1].1 == c {
                return Err(Error::Graph(format!("duplicate entry ({r}, {c})")));
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// All stored entries in row-major order.
    pub fn to_edge_list(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
            })
            .collect()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at `(r, c)`, if any.
    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).ok().map(|k| vals[k])
    }

    /// Returns a copy with every stored value replaced by `f(row, col, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for r in 0..self.n_rows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                out.values[k] = f(r, self.col_indices[k], self.values[k]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// True when the pattern and values are symmetric within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals)
                .all(|(&c, &v)| matches!(self.get(c, r), Some(w) if (v - w).abs() <= tol))
        })
    }

    /// `y = self · x` for a single vector.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `self · x` for a dense row-major block of column vectors.
    pub fn mul_dense(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((self.n_rows, x.ncols()));
        self.mul_dense_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `self · x` into `out` (overwriting it).
    pub fn mul_dense_into(&self, x: ArrayView2<f64>, out: &mut Array2<f64>) -> Result<()> {
        if x.nrows() != self.n_cols || out.dim() != (self.n_rows, x.ncols()) {
            return Err(Error::shape(
                "sparse matmul",
                format!(
                    "{}x{} · {}x{} into {:?}",
                    self.n_rows,
                    self.n_cols,
                    x.nrows(),
                    x.ncols(),
                    out.dim()
                ),
            ));
        }
        let d = x.ncols();
        match (x.as_slice(), out.as_slice_mut()) {
            (Some(xs), Some(os)) => {
                for r in 0..self.n_rows {
                    let orow = &mut os[r * d..(r + 1) * d];
                    orow.fill(0.0);
                    let (cols, vals) = self.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        let xrow = &xs[c * d..(c + 1) * d];
                        for (o, &xv) in orow.iter_mut().zip(xrow) {
                            *o += v * xv;
                        }
                    }
                }
            }
            _ => {
                out.fill(0.0);
                for r in 0..self.n_rows {
                    let (cols, vals) = self.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        let xrow = x.row(c);
                        let mut orow = out.row_mut(r);
                        orow.scaled_add(v, &xrow);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[[r, c]] = v;
            }
        }
        out
    }
}
