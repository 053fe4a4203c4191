//! Chebyshev approximation of spectral filters and fast polynomial filtering.
//!
//! A filter `g` on `[0, λ_max]` is expanded as
//! `g(λ) ≈ c₀/2 + Σ_{k≥1} c_k T_k(y)`, `y = (λ − a)/a`, `a = λ_max/2`.
//! The halved constant term makes constant targets exact. A single
//! coefficient vector serves every scale `s` through the substitution
//! `λ ↦ sλ` (the rescaling trick), so `g(sL)X` costs `M` sparse products
//! per scale.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;

/// How out-of-range frequencies `sλ > λ_max` are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampMode {
    /// Cap the evaluated frequency at `λ_max` (scalar path) or the operator
    /// scale at `λ_max / λ̂` (operator path).
    #[default]
    Clamp,
    /// Evaluate the polynomial outside `[-1, 1]` as is.
    Extrapolate,
}

/// Truncated Chebyshev expansion `c_0..c_M` of a filter on `[0, λ_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFilter {
    coefficients: Vec<f64>,
    lambda_max: f64,
}

impl ChebyshevFilter {
    pub fn new(coefficients: Vec<f64>, lambda_max: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Argument("filter needs at least c_0".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("ChebyshevFilter coefficients"));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::Argument(format!(
                "lambda_max must be > 0, got {lambda_max}"
            )));
        }
        Ok(Self {
            coefficients,
            lambda_max,
        })
    }

    /// The expansion of `g ≡ 1`: `c_0 = 2`, every other coefficient zero.
    pub fn all_pass(order: usize, lambda_max: f64) -> Result<Self> {
        Self::new(all_pass_coefficients(order), lambda_max)
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }
}

pub fn all_pass_coefficients(order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order + 1];
    c[0] = 2.0;
    c
}

/// Multiplicative scales `s_1 < … < s_J` shared by one coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSet {
    scales: Vec<f64>,
    clamp_mode: ClampMode,
}

impl ScaleSet {
    pub fn new(mut scales: Vec<f64>, clamp_mode: ClampMode) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::Config("scale set must not be empty".into()));
        }
        if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Config(format!(
                "scale {s} must be positive and finite"
            )));
        }
        scales.sort_by(f64::total_cmp);
        Ok(Self { scales, clamp_mode })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn clamp_mode(&self) -> ClampMode {
        self.clamp_mode
    }
}

/// Default trapezoid size: `max(64, 8·(M+1))`.
pub fn default_quadrature_points(order: usize) -> usize {
    (8 * (order + 1)).max(64)
}

/// Fits `target` on `[0, λ_max]` by trapezoidal quadrature of
/// `c_k = (2/π) ∫₀^π cos(kθ) g(a(cos θ + 1)) dθ`.
pub fn fit_chebyshev(
    target: impl Fn(f64) -> f64,
    lambda_max: f64,
    order: usize,
    n_quadrature: usize,
) -> Result<ChebyshevFilter> {
    if n_quadrature < 4 * (order + 1) {
        return Err(Error::Argument(format!(
            "n_quadrature {n_quadrature} < 4·(M+1) = {}",
            4 * (order + 1)
        )));
    }
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::Argument(format!(
            "lambda_max must be > 0, got {lambda_max}"
        )));
    }
    let a = lambda_max / 2.0;
    let intervals = (n_quadrature - 1) as f64;
    let h = std::f64::consts::PI / intervals;
    let samples: Vec<(f64, f64)> = (0..n_quadrature)
        .map(|i| {
            let theta = i as f64 * h;
            let g = target(a * (theta.cos() + 1.0));
            let w = if i == 0 || i == n_quadrature - 1 {
                0.5
            } else {
                1.0
            };
            (theta, w * g)
        })
        .collect();
    if samples.iter().any(|(_, g)| !g.is_finite()) {
        return Err(Error::NonFinite("fit_chebyshev target"));
    }
    let coefficients = (0..=order)
        .map(|k| {
            let sum: f64 = samples
                .iter()
                .map(|&(theta, wg)| (k as f64 * theta).cos() * wg)
                .sum();
            2.0 / std::f64::consts::PI * h * sum
        })
        .collect();
    ChebyshevFilter::new(coefficients, lambda_max)
}

/// `Σ' c_k T_k(y)` (constant term halved), by Clenshaw's recurrence.
pub fn chebyshev_series(coefficients: &[f64], y: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coefficients.iter().skip(1).rev() {
        let b0 = 2.0 * y * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    y * b1 - b2 + 0.5 * coefficients[0]
}

/// Filter response `g(sλ)` with the fixed coefficients.
pub fn evaluate_filter(f: &ChebyshevFilter, scale: f64, lambda: f64, mode: ClampMode) -> f64 {
    let mut x = scale * lambda;
    if mode == ClampMode::Clamp {
        x = x.min(f.lambda_max);
    }
    let a = f.lambda_max / 2.0;
    chebyshev_series(&f.coefficients, (x - a) / a)
}

/// Operator scale actually applied on the sparse path. Under clamping the
/// spectrum of `sL` (bounded by `s·λ̂`) is kept inside `[0, λ_max]`.
pub fn effective_scale(scale: f64, lambda_max: f64, lambda_hat: f64, mode: ClampMode) -> f64 {
    match mode {
        ClampMode::Extrapolate => scale,
        ClampMode::Clamp if lambda_hat > 0.0 => scale.min(lambda_max / lambda_hat),
        ClampMode::Clamp => scale,
    }
}

/// `T_0(L̃)X … T_M(L̃)X` for `L̃ = (sL − aI)/a`, `a = λ_max/2`.
pub fn chebyshev_terms(
    laplacian: &SparseMatrix,
    scale: f64,
    lambda_max: f64,
    x: ArrayView2<f64>,
    order: usize,
) -> Result<Vec<Array2<f64>>> {
    if laplacian.n_rows() != laplacian.n_cols() || laplacian.n_cols() != x.nrows() {
        return Err(Error::shape(
            "chebyshev_terms",
            format!(
                "L is {}x{}, X has {} rows",
                laplacian.n_rows(),
                laplacian.n_cols(),
                x.nrows()
            ),
        ));
    }
    let a = lambda_max / 2.0;
    let alpha = scale / a;
    let mut terms: Vec<Array2<f64>> = Vec::with_capacity(order + 1);
    terms.push(x.to_owned());
    if order >= 1 {
        let mut t1 = laplacian.mul_dense(x)?;
        t1.zip_mut_with(&x, |t, &xv| *t = alpha * *t - xv);
        terms.push(t1);
    }
    for k in 2..=order {
        let mut next = laplacian.mul_dense(terms[k - 1].view())?;
        let prev = &terms[k - 1];
        let prev2 = &terms[k - 2];
        ndarray::Zip::from(&mut next)
            .and(prev)
            .and(prev2)
            .for_each(|n, &p, &p2| *n = 2.0 * (alpha * *n - p) - p2);
        terms.push(next);
    }
    Ok(terms)
}

/// `Σ' c_k · terms[k]`.
pub fn combine_terms(coefficients: &[f64], terms: &[Array2<f64>]) -> Array2<f64> {
    let mut out = terms[0].mapv(|v| 0.5 * coefficients[0] * v);
    for (c, t) in coefficients.iter().zip(terms).skip(1) {
        out.scaled_add(*c, t);
    }
    out
}

/// `g(sL)X` assuming the spectrum of `L` may reach the filter's `λ_max`.
pub fn apply_filter(
    f: &ChebyshevFilter,
    scale: f64,
    laplacian: &SparseMatrix,
    x: ArrayView2<f64>,
    mode: ClampMode,
) -> Result<Array2<f64>> {
    apply_filter_bounded(f, scale, laplacian, f.lambda_max, x, mode)
}

/// `g(sL)X` given a spectral estimate `λ̂ ≥ λ_max(L)` used for clamping.
pub fn apply_filter_bounded(
    f: &ChebyshevFilter,
    scale: f64,
    laplacian: &SparseMatrix,
    lambda_hat: f64,
    x: ArrayView2<f64>,
    mode: ClampMode,
) -> Result<Array2<f64>> {
    let s = effective_scale(scale, f.lambda_max, lambda_hat, mode);
    let terms = chebyshev_terms(laplacian, s, f.lambda_max, x, f.order())?;
    Ok(combine_terms(&f.coefficients, &terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn p2() -> SparseMatrix {
        SparseMatrix::from_edge_list(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)],
        )
        .unwrap()
    }

    /// Independent series evaluation through explicit `T_k` values.
    fn naive_series(c: &[f64], y: f64) -> f64 {
        let mut t = vec![1.0, y];
        for k in 2..c.len() {
            t.push(2.0 * y * t[k - 1] - t[k - 2]);
        }
        0.5 * c[0] + c.iter().zip(&t).skip(1).map(|(a, b)| a * b).sum::<f64>()
    }

    #[test]
    fn linear_target_coefficients() {
        let f = fit_chebyshev(|l| l, 2.0, 1, 64).unwrap();
        assert!((f.coefficients()[0] - 2.0).abs() < 1e-12);
        assert!((f.coefficients()[1] - 1.0).abs() < 1e-12);
        for lam in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert!((evaluate_filter(&f, 1.0, lam, ClampMode::Clamp) - lam).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_target_exact() {
        for m in [0, 3, 16] {
            let f = fit_chebyshev(|_| 1.0, 3.0, m, default_quadrature_points(m)).unwrap();
            for i in 0..=1000 {
                let lam = 3.0 * i as f64 / 1000.0;
                assert!((evaluate_filter(&f, 1.0, lam, ClampMode::Clamp) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heat_kernel_fit_is_accurate() {
        let f = fit_chebyshev(|l| (-l).exp(), 2.0, 40, default_quadrature_points(40)).unwrap();
        let err = (0..1000)
            .map(|i| 2.0 * i as f64 / 999.0)
            .map(|l| (evaluate_filter(&f, 1.0, l, ClampMode::Clamp) - (-l).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn fit_error_decreases_with_order() {
        let sup = |m: usize| {
            let f = fit_chebyshev(
                |l| 1.0 / (1.0 + l * l),
                4.0,
                m,
                default_quadrature_points(m),
            )
            .unwrap();
            (0..1000)
                .map(|i| 4.0 * i as f64 / 999.0)
                .map(|l| {
                    (evaluate_filter(&f, 1.0, l, ClampMode::Clamp) - 1.0 / (1.0 + l * l)).abs()
                })
                .fold(0.0, f64::max)
        };
        let errs: Vec<f64> = [2, 4, 8, 16, 32].iter().map(|&m| sup(m)).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fit_chebyshev(|l| l, 2.0, 4, 10).is_err());
        assert!(matches!(
            fit_chebyshev(|l| 1.0 / (l - 1.0), 2.0, 1, 9),
            Err(Error::NonFinite(_))
        ));
        assert!(ChebyshevFilter::new(vec![], 1.0).is_err());
        assert!(ChebyshevFilter::new(vec![1.0], 0.0).is_err());
        assert!(ScaleSet::new(vec![], ClampMode::Clamp).is_err());
        assert!(ScaleSet::new(vec![1.0, -0.5], ClampMode::Clamp).is_err());
    }

    #[test]
    fn scale_set_sorted() {
        let s = ScaleSet::new(vec![2.0, 0.5, 1.0], ClampMode::Clamp).unwrap();
        assert_eq!(s.scales(), &[0.5, 1.0, 2.0]);
    }

    #[test]
    fn clenshaw_matches_explicit_recurrence() {
        let c = [0.3, -1.2, 0.7, 2.0, -0.4];
        for y in [-1.0, -0.3, 0.0, 0.8, 1.0, 1.7, -2.5] {
            assert!((chebyshev_series(&c, y) - naive_series(&c, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_examples() {
        let f = fit_chebyshev(|l| l, 2.0, 1, 64).unwrap();
        assert!((evaluate_filter(&f, 0.5, 2.0, ClampMode::Clamp) - 1.0).abs() < 1e-12);
        // clamped at λ_max: g(2) = 2
        assert!((evaluate_filter(&f, 2.0, 1.5, ClampMode::Clamp) - 2.0).abs() < 1e-12);
        // extrapolated linear filter keeps going
        assert!((evaluate_filter(&f, 2.0, 1.5, ClampMode::Extrapolate) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_pass_apply_is_identity() {
        let f = ChebyshevFilter::all_pass(8, 2.0).unwrap();
        let x = array![[0.3, -1.0], [2.0, 0.5]];
        for s in [0.1, 1.0, 7.0] {
            for mode in [ClampMode::Clamp, ClampMode::Extrapolate] {
                let y = apply_filter(&f, s, &p2(), x.view(), mode).unwrap();
                assert!((&y - &x).iter().all(|d| d.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn linear_filter_is_laplacian() {
        let f = fit_chebyshev(|l| l, 2.0, 1, 64).unwrap();
        let y = apply_filter(
            &f,
            1.0,
            &p2(),
            array![[1.0], [0.0]].view(),
            ClampMode::Clamp,
        )
        .unwrap();
        assert!((y[[0, 0]] - 1.0).abs() < 1e-12 && (y[[1, 0]] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_on_p2() {
        // eigenpairs {0: (1,1)/√2, 2: (1,-1)/√2}
        let f = fit_chebyshev(|l| (-l).exp(), 2.0, 40, default_quadrature_points(40)).unwrap();
        let y = apply_filter(
            &f,
            1.0,
            &p2(),
            array![[1.0], [0.0]].view(),
            ClampMode::Clamp,
        )
        .unwrap();
        let e2 = (-2.0f64).exp();
        assert!((y[[0, 0]] - (1.0 + e2) / 2.0).abs() < 1e-8);
        assert!((y[[1, 0]] - (1.0 - e2) / 2.0).abs() < 1e-8);
        assert!((y[[0, 0]] - 0.56767).abs() < 1e-5);
    }

    #[test]
    fn shape_mismatch() {
        let f = ChebyshevFilter::all_pass(2, 2.0).unwrap();
        let x = Array2::zeros((3, 1));
        assert!(matches!(
            apply_filter(&f, 1.0, &p2(), x.view(), ClampMode::Clamp),
            Err(Error::Shape { .. })
        ));
    }
}
