use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GraphSnapshot, SparseMatrix};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DENSE_LIMIT};

/// Which graph Laplacian to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianKind {
    /// `L = D − A`.
    #[default]
    Combinatorial,
    /// `L = I − D^{-1/2} A D^{-1/2}`; isolated nodes get an all-zero row.
    Normalized,
}

/// Combinatorial Laplacian `D − A` with an explicit diagonal entry on every row.
pub fn build_laplacian(g: &GraphSnapshot) -> SparseMatrix {
    build_laplacian_with(g, LaplacianKind::Combinatorial)
}

pub fn build_laplacian_with(g: &GraphSnapshot, kind: LaplacianKind) -> SparseMatrix {
    let a = g.adjacency();
    let n = a.n_rows();
    let degrees: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(a.nnz() + n);
    let mut values = Vec::with_capacity(a.nnz() + n);
    row_offsets.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let diag = match kind {
            LaplacianKind::Combinatorial => degrees[i],
            LaplacianKind::Normalized if degrees[i] > 0.0 => 1.0,
            LaplacianKind::Normalized => 0.0,
        };
        let mut diag_written = false;
        for (&j, &w) in cols.iter().zip(vals) {
            if !diag_written && j > i {
                col_indices.push(i);
                values.push(diag);
                diag_written = true;
            }
            col_indices.push(j);
            values.push(match kind {
                LaplacianKind::Combinatorial => -w,
                LaplacianKind::Normalized => -w * inv_sqrt[i] * inv_sqrt[j],
            });
        }
        if !diag_written {
            col_indices.push(i);
            values.push(diag);
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::new(n, n, row_offsets, col_indices, values)
        .expect("laplacian of a valid snapshot is valid CSR")
}

/// Strategy for bounding the largest Laplacian eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    /// Dense eigendecomposition; only for `N ≤ 2000`.
    ExactSmall,
    /// Power iteration with a residual stopping rule.
    PowerIteration,
    /// Gershgorin bound, `2·max_degree` for the combinatorial Laplacian.
    DegreeBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEstimate {
    pub value: f64,
    /// Set when power iteration failed to converge and the degree bound was used.
    pub fell_back: bool,
}

pub const POWER_ITERATION_MAX_ITERS: usize = 500;
pub const POWER_ITERATION_TOL: f64 = 1e-6;

pub fn estimate_lambda_max(l: &SparseMatrix, mode: LambdaMode) -> Result<LambdaEstimate> {
    let n = l.n_rows();
    if l.n_cols() != n {
        return Err(Error::shape("estimate_lambda_max", "matrix is not square"));
    }
    let exact = |value| LambdaEstimate {
        value,
        fell_back: false,
    };
    match mode {
        LambdaMode::DegreeBound => Ok(exact(gershgorin_bound(l))),
        LambdaMode::ExactSmall => {
            if n > DENSE_LIMIT {
                return Err(Error::SizeLimit {
                    n,
                    limit: DENSE_LIMIT,
                });
            }
            let (vals, _) = symmetric_eigen(&l.to_dense())?;
            Ok(exact(vals.last().copied().unwrap_or(0.0)))
        }
        LambdaMode::PowerIteration => Ok(match power_iteration(l) {
            Some(v) => exact(v),
            None => LambdaEstimate {
                value: gershgorin_bound(l),
                fell_back: true,
            },
        }),
    }
}

fn gershgorin_bound(l: &SparseMatrix) -> f64 {
    (0..l.n_rows())
        .map(|i| l.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Rayleigh quotient once `‖Lx − ρx‖ ≤ tol·ρ`; `None` if that never happens.
fn power_iteration(l: &SparseMatrix) -> Option<f64> {
    let n = l.n_rows();
    if n == 0 {
        return Some(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a4b);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut x);
    let mut y = vec![0.0; n];
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        l.matvec(&x, &mut y);
        let rho: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - rho * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= POWER_ITERATION_TOL * rho.abs() {
            return Some(rho);
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Some(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    None
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn snap(n: usize, edges: &[(usize, usize, f64)]) -> GraphSnapshot {
        GraphSnapshot::from_edges(n, edges, Array2::zeros((n, 1)), 0).unwrap()
    }

    fn k3() -> GraphSnapshot {
        snap(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    }

    #[test]
    fn path_two() {
        let l = build_laplacian(&snap(2, &[(0, 1, 1.0)]));
        assert_eq!(l.to_dense(), array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn isolated_node_has_zero_diagonal() {
        let l = build_laplacian(&snap(1, &[]));
        assert_eq!(l.nnz(), 1);
        assert_eq!(l.to_dense(), array![[0.0]]);
    }

    #[test]
    fn triangle() {
        let l = build_laplacian(&k3()).to_dense();
        for i in 0..3 {
            assert_eq!(l[[i, i]], 2.0);
            assert!(l.row(i).sum().abs() < 1e-12);
            for j in 0..3 {
                if i != j {
                    assert_eq!(l[[i, j]], -1.0);
                }
            }
        }
    }

    #[test]
    fn normalized_is_bounded_by_two() {
        let l = build_laplacian_with(
            &snap(4, &[(0, 1, 1.0), (1, 2, 2.0)]),
            LaplacianKind::Normalized,
        );
        assert!(l.is_symmetric(1e-15));
        assert_eq!(l.get(3, 3), Some(0.0));
        let est = estimate_lambda_max(&l, LambdaMode::ExactSmall).unwrap();
        assert!(est.value <= 2.0 + 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let p2 = build_laplacian(&snap(2, &[(0, 1, 1.0)]));
        let exact = estimate_lambda_max(&p2, LambdaMode::ExactSmall)
            .unwrap()
            .value;
        assert!((exact - 2.0).abs() < 1e-12);
        assert_eq!(
            estimate_lambda_max(&p2, LambdaMode::DegreeBound)
                .unwrap()
                .value,
            2.0
        );
        let k3l = build_laplacian(&k3());
        let exact = estimate_lambda_max(&k3l, LambdaMode::ExactSmall)
            .unwrap()
            .value;
        assert!((exact - 3.0).abs() < 1e-12);
        let pi = estimate_lambda_max(&k3l, LambdaMode::PowerIteration).unwrap();
        assert!(!pi.fell_back);
        assert!((pi.value - 3.0).abs() < 1e-5);
    }

    #[test]
    fn empty_graph_power_iteration() {
        let l = build_laplacian(&snap(3, &[]));
        let est = estimate_lambda_max(&l, LambdaMode::PowerIteration).unwrap();
        assert_eq!(est.value, 0.0);
    }
}
