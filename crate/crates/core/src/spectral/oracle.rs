//! Dense ground-truth spectral operators from a full eigendecomposition.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::linalg::{symmetric_eigen, DENSE_LIMIT};

/// `L = U Λ Uᵀ` with eigenvalues ascending and eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralOracle {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<f64>,
}

impl SpectralOracle {
    pub fn new(laplacian: &SparseMatrix) -> Result<Self> {
        let n = laplacian.n_rows();
        if n > DENSE_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: DENSE_LIMIT,
            });
        }
        if !laplacian.is_symmetric(1e-12) {
            return Err(Error::Precondition(
                "oracle needs a symmetric matrix".into(),
            ));
        }
        let (eigenvalues, eigenvectors) = symmetric_eigen(&laplacian.to_dense())?;
        if let Some(v) = eigenvalues.iter().find(|&&v| v < -1e-9) {
            return Err(Error::Precondition(format!(
                "matrix is not positive semidefinite (eigenvalue {v})"
            )));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `response(s·λ_k)` for every eigenvalue.
    pub fn spectrum_values(&self, response: &dyn Fn(f64) -> f64, scale: f64) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&l| response(scale * l))
            .collect()
    }

    /// `U diag(values) Uᵀ`.
    pub fn support_from_values(&self, values: &[f64]) -> Result<Array2<f64>> {
        if values.len() != self.n() {
            return Err(Error::shape(
                "support_from_values",
                format!("{} values for {} eigenpairs", values.len(), self.n()),
            ));
        }
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &v) in scaled.columns_mut().into_iter().zip(values) {
            col *= v;
        }
        let c = scaled.dot(&self.eigenvectors.t());
        // symmetrize away rounding
        Ok((&c + &c.t()) * 0.5)
    }
}

/// `U diag(response(sλ)) Uᵀ X`.
pub fn exact_filter_apply(
    oracle: &SpectralOracle,
    response: &dyn Fn(f64) -> f64,
    scale: f64,
    x: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if x.nrows() != oracle.n() {
        return Err(Error::shape(
            "exact_filter_apply",
            format!("X has {} rows, oracle has {} nodes", x.nrows(), oracle.n()),
        ));
    }
    let u = &oracle.eigenvectors;
    let mut coords = u.t().dot(&x);
    let g = Array1::from(oracle.spectrum_values(response, scale));
    for (mut row, gv) in coords.rows_mut().into_iter().zip(g.iter()) {
        row *= *gv;
    }
    Ok(u.dot(&coords))
}

/// Dense convolution support `C = U diag(response(sλ)) Uᵀ`.
pub fn convolution_support(
    oracle: &SpectralOracle,
    response: &dyn Fn(f64) -> f64,
    scale: f64,
) -> Result<Array2<f64>> {
    oracle.support_from_values(&oracle.spectrum_values(response, scale))
}
