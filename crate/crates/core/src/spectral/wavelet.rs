use ndarray::Array2;

use super::chebyshev::{apply_filter, evaluate_filter, ChebyshevFilter, ClampMode, ScaleSet};
use crate::csvfmt::{Table, RESPONSE_DIGITS};
use crate::error::{Error, Result};
use crate::graph::SparseMatrix;

/// Impulse response `ψ_{s,n} = g(sL) δ_n`.
pub fn wavelet_vector(
    f: &ChebyshevFilter,
    scale: f64,
    laplacian: &SparseMatrix,
    node: usize,
    mode: ClampMode,
) -> Result<Vec<f64>> {
    let n = laplacian.n_rows();
    if node >= n {
        return Err(Error::Index {
            index: node,
            len: n,
        });
    }
    let mut delta = Array2::zeros((n, 1));
    delta[[node, 0]] = 1.0;
    let psi = apply_filter(f, scale, laplacian, delta.view(), mode)?;
    Ok(psi.column(0).to_vec())
}

/// `node,value` table of a wavelet vector.
pub fn wavelet_table(psi: &[f64]) -> Table {
    let mut t = Table::new(["node", "value"]);
    for (i, v) in psi.iter().enumerate() {
        t.push(vec![i.to_string(), crate::csvfmt::format_value(*v)]);
    }
    t
}

/// Filter responses `g(s_j λ)` sampled on a uniform grid over `[0, λ_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponseTable {
    pub lambda_grid: Vec<f64>,
    pub scales: Vec<f64>,
    /// `responses[[j, i]] = g(s_j · lambda_grid[i])`.
    pub responses: Array2<f64>,
}

impl FilterResponseTable {
    /// Header `lambda,s_1,...,s_J`; one row per grid point.
    pub fn table(&self) -> Table {
        let header = std::iter::once("lambda".to_string())
            .chain((1..=self.scales.len()).map(|j| format!("s_{j}")));
        let mut t = Table::new(header);
        for (i, &l) in self.lambda_grid.iter().enumerate() {
            let mut row = vec![l];
            row.extend(self.responses.column(i).iter());
            t.push_values_with(&row, RESPONSE_DIGITS);
        }
        t
    }
}

pub fn filter_response_table(
    f: &ChebyshevFilter,
    scales: &ScaleSet,
    n_grid: usize,
) -> Result<FilterResponseTable> {
    if n_grid < 2 {
        return Err(Error::Argument(format!(
            "n_grid must be >= 2, got {n_grid}"
        )));
    }
    let lmax = f.lambda_max();
    let lambda_grid: Vec<f64> = (0..n_grid)
        .map(|i| {
            if i == n_grid - 1 {
                lmax
            } else {
                lmax * i as f64 / (n_grid - 1) as f64
            }
        })
        .collect();
    let responses = Array2::from_shape_fn((scales.len(), n_grid), |(j, i)| {
        evaluate_filter(f, scales.scales()[j], lambda_grid[i], scales.clamp_mode())
    });
    if responses.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("filter_response_table"));
    }
    Ok(FilterResponseTable {
        lambda_grid,
        scales: scales.scales().to_vec(),
        responses,
    })
}

#[cfg(test)]
mod tests {
    use super::super::chebyshev::fit_chebyshev;
    use super::*;

    fn path(n: usize) -> SparseMatrix {
        let mut e = Vec::new();
        for i in 0..n {
            let deg = (i > 0) as usize + (i + 1 < n) as usize;
            e.push((i, i, deg as f64));
            if i + 1 < n {
                e.push((i, i + 1, -1.0));
                e.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_edge_list(n, n, &e).unwrap()
    }

    #[test]
    fn all_pass_wavelet_is_impulse() {
        let f = ChebyshevFilter::all_pass(5, 4.0).unwrap();
        let psi = wavelet_vector(&f, 1.3, &path(4), 2, ClampMode::Clamp).unwrap();
        let want = [0.0, 0.0, 1.0, 0.0];
        assert!(psi.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn linear_wavelet_is_laplacian_column() {
        let f = fit_chebyshev(|l| l, 4.0, 1, 64).unwrap();
        let psi = wavelet_vector(&f, 1.0, &path(3), 0, ClampMode::Clamp).unwrap();
        let want = [1.0, -1.0, 0.0];
        assert!(psi.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn locality_gives_exact_zeros() {
        let f = fit_chebyshev(|l: f64| (-l).exp(), 4.0, 2, 64).unwrap();
        let psi = wavelet_vector(&f, 1.0, &path(7), 0, ClampMode::Clamp).unwrap();
        assert!(psi[..3].iter().all(|&v| v != 0.0));
        assert_eq!(&psi[4..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn wavelet_index_error() {
        let f = ChebyshevFilter::all_pass(1, 2.0).unwrap();
        assert!(matches!(
            wavelet_vector(&f, 1.0, &path(3), 3, ClampMode::Clamp),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn response_table_examples() {
        let ap = ChebyshevFilter::all_pass(4, 2.0).unwrap();
        let scales = ScaleSet::new(vec![0.5, 1.0, 2.0], ClampMode::Clamp).unwrap();
        let t = filter_response_table(&ap, &scales, 11).unwrap();
        assert_eq!(t.responses.dim(), (3, 11));
        assert!(t.responses.iter().all(|&v| (v - 1.0).abs() < 1e-12));

        let lin = fit_chebyshev(|l| l, 2.0, 1, 64).unwrap();
        let one = ScaleSet::new(vec![1.0], ClampMode::Clamp).unwrap();
        let t = filter_response_table(&lin, &one, 3).unwrap();
        assert_eq!(t.lambda_grid, vec![0.0, 1.0, 2.0]);
        for (i, want) in [0.0, 1.0, 2.0].iter().enumerate() {
            assert!((t.responses[[0, i]] - want).abs() < 1e-12);
        }
        assert!(filter_response_table(&lin, &one, 1).is_err());

        let csv = filter_response_table(&ap, &scales, 3)
            .unwrap()
            .table()
            .to_csv();
        assert_eq!(csv, "lambda,s_1,s_2,s_3\n0,1,1,1\n1,1,1,1\n2,1,1,1\n");
        assert_eq!(
            wavelet_table(&[0.5, 0.0]).to_csv(),
            "node,value\n0,0.5\n1,0\n"
        );
    }
}
