//! Empirical checks of the approximation-error bounds for learned filters
//! and of the layer-wise damping of cosine similarity.

use std::sync::Arc;

use super::chebyshev::{
    default_quadrature_points, evaluate_filter, fit_chebyshev, ChebyshevFilter, ClampMode,
};
use super::oracle::SpectralOracle;
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, DynamicGraph};

/// A scalar spectral response `λ ↦ g(λ)`.
pub type Response = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const LEMMA1_PART2_LIMIT: usize = 500;
const LEMMA1_PART1_LIMIT: usize = 200;
const HOLDS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationError {
    pub eps_ca: f64,
    /// `|ĝ(sλ_k) − g(sλ_k)|` in eigenvalue order.
    pub per_eigenvalue: Vec<f64>,
}

pub fn approximation_error(
    f: &ChebyshevFilter,
    scale: f64,
    oracle: &SpectralOracle,
    response: &dyn Fn(f64) -> f64,
) -> ApproximationError {
    let per_eigenvalue: Vec<f64> = oracle
        .eigenvalues()
        .iter()
        .map(|&l| (evaluate_filter(f, scale, l, ClampMode::Clamp) - response(scale * l)).abs())
        .collect();
    ApproximationError {
        eps_ca: per_eigenvalue.iter().copied().fold(0.0, f64::max),
        per_eigenvalue,
    }
}

fn oracles(graph: &DynamicGraph, limit: usize) -> Result<Vec<SpectralOracle>> {
    if graph.n_nodes() > limit {
        return Err(Error::SizeLimit {
            n: graph.n_nodes(),
            limit,
        });
    }
    graph
        .snapshots()
        .iter()
        .map(|g| SpectralOracle::new(&build_laplacian(g)))
        .collect()
}

fn frobenius_diff(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn learned_values(f: &ChebyshevFilter, oracle: &SpectralOracle) -> Vec<f64> {
    oracle
        .eigenvalues()
        .iter()
        .map(|&l| evaluate_filter(f, 1.0, l, ClampMode::Clamp))
        .collect()
}

fn check_lengths(graph: &DynamicGraph, desired: usize, learned: usize) -> Result<()> {
    if desired != graph.len() || learned != graph.len() {
        return Err(Error::Argument(format!(
            "{} snapshots but {desired} desired responses and {learned} learned filters",
            graph.len()
        )));
    }
    Ok(())
}

/// Filter fitted on a snapshot's own spectral range (`1.01·λ_max`).
pub fn fit_on_oracle(
    oracle: &SpectralOracle,
    response: &dyn Fn(f64) -> f64,
    order: usize,
) -> Result<ChebyshevFilter> {
    let lmax = super::filter_lambda_max(oracle.eigenvalues().last().copied().unwrap_or(0.0));
    fit_chebyshev(response, lmax, order, default_quadrature_points(order))
}

/// One consecutive pair `(t, t+1)` of the temporal-stability bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Part2Row {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub eps_ca: f64,
    pub holds: bool,
}

/// Compares `‖C^a_{t+1} − C^a_t‖_F` against `‖C_{t+1} − C_t‖_F + 2√N·ε_ca`.
pub fn lemma1_part2_check(
    graph: &DynamicGraph,
    desired: &[Response],
    learned: &[ChebyshevFilter],
) -> Result<Vec<Lemma1Part2Row>> {
    check_lengths(graph, desired.len(), learned.len())?;
    let oracles = oracles(graph, LEMMA1_PART2_LIMIT)?;
    let sqrt_n = (graph.n_nodes() as f64).sqrt();
    let mut exact = Vec::with_capacity(graph.len());
    let mut approx = Vec::with_capacity(graph.len());
    let mut eps = Vec::with_capacity(graph.len());
    for ((o, g), f) in oracles.iter().zip(desired).zip(learned) {
        exact.push(o.support_from_values(&o.spectrum_values(g.as_ref(), 1.0))?);
        approx.push(o.support_from_values(&learned_values(f, o))?);
        eps.push(approximation_error(f, 1.0, o, g.as_ref()).eps_ca);
    }
    Ok((0..graph.len().saturating_sub(1))
        .map(|t| {
            let lhs = frobenius_diff(&approx[t + 1], &approx[t]);
            let eps_ca = eps[t].max(eps[t + 1]);
            let rhs = frobenius_diff(&exact[t + 1], &exact[t]) + 2.0 * sqrt_n * eps_ca;
            Lemma1Part2Row {
                t,
                lhs,
                rhs,
                eps_ca,
                holds: lhs <= rhs + HOLDS_SLACK,
            }
        })
        .collect())
}

/// A map from the response at `t` to the response at `t+1` with a known
/// Lipschitz constant in the sup norm.
#[derive(Clone)]
pub enum MarkovFunctional {
    Identity,
    Scale(f64),
    /// Ignores the past entirely.
    Constant(Response),
}

impl std::fmt::Debug for MarkovFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::Scale(c) => write!(f, "Scale({c})"),
            Self::Constant(_) => write!(f, "Constant(..)"),
        }
    }
}

impl MarkovFunctional {
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Scale(c) => c.abs(),
            Self::Constant(_) => 0.0,
        }
    }

    pub fn apply(&self, prev: Response) -> Response {
        match self {
            Self::Identity => prev,
            Self::Scale(c) => {
                let c = *c;
                Arc::new(move |l| c * prev(l))
            }
            Self::Constant(g) => g.clone(),
        }
    }
}

/// Desired responses `G_t`, learned filters `G^a_t` and the measured
/// functional-approximation error of each step.
#[derive(Clone)]
pub struct MarkovChain {
    pub desired: Vec<Response>,
    pub learned: Vec<ChebyshevFilter>,
    /// `eps_fa[t] = ‖G^a_{t+1}(Λ_{t+1}) − f(G^a_t)(Λ_{t+1})‖₂`.
    pub eps_fa: Vec<f64>,
}

/// Runs the desired process `G_{t+1} = f(G_t)` alongside the learned one,
/// where `G^a_{t+1}` is an order-`M` fit of `f(G^a_t)` on snapshot `t+1`.
pub fn simulate_markov_filters(
    graph: &DynamicGraph,
    functional: &MarkovFunctional,
    initial: Response,
    order: usize,
) -> Result<MarkovChain> {
    let oracles = oracles(graph, LEMMA1_PART1_LIMIT)?;
    let mut desired = vec![initial.clone()];
    let mut learned = vec![fit_on_oracle(&oracles[0], initial.as_ref(), order)?];
    let mut eps_fa = Vec::new();
    for o in &oracles[1..] {
        let next = functional.apply(desired.last().expect("non-empty").clone());
        let prev_fit = learned.last().expect("non-empty").clone();
        let target = functional.apply(Arc::new(move |l| {
            evaluate_filter(&prev_fit, 1.0, l, ClampMode::Clamp)
        }));
        let fit = fit_on_oracle(o, target.as_ref(), order)?;
        let gap = learned_values(&fit, o)
            .iter()
            .zip(o.spectrum_values(target.as_ref(), 1.0))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        desired.push(next);
        learned.push(fit);
        eps_fa.push(gap);
    }
    Ok(MarkovChain {
        desired,
        learned,
        eps_fa,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Part1Row {
    pub t: usize,
    pub lhs: f64,
    /// `Lip·N²·√(‖C^a_t − C_t‖² + 2ε_ca²) + ε_fa`, the bound as derived.
    pub rhs: f64,
    /// Same with `ε_ca²` in place of `2ε_ca²`.
    pub rhs_statement: f64,
    pub eps_ca: f64,
    pub eps_fa: f64,
    pub holds: bool,
}

/// Compares `‖C^a_{t+1} − C_{t+1}‖_F` against the propagated error bound.
pub fn lemma1_part1_check(
    graph: &DynamicGraph,
    functional: &MarkovFunctional,
    chain: &MarkovChain,
) -> Result<Vec<Lemma1Part1Row>> {
    check_lengths(graph, chain.desired.len(), chain.learned.len())?;
    if chain.eps_fa.len() + 1 != graph.len() {
        return Err(Error::Argument(
            "need one eps_fa per consecutive pair".into(),
        ));
    }
    let oracles = oracles(graph, LEMMA1_PART1_LIMIT)?;
    let n2 = (graph.n_nodes() as f64).powi(2);
    let lip = functional.lipschitz();
    let mut gaps = Vec::with_capacity(graph.len());
    let mut eps = Vec::with_capacity(graph.len());
    for ((o, g), f) in oracles.iter().zip(&chain.desired).zip(&chain.learned) {
        let exact = o.support_from_values(&o.spectrum_values(g.as_ref(), 1.0))?;
        let approx = o.support_from_values(&learned_values(f, o))?;
        gaps.push(frobenius_diff(&approx, &exact));
        eps.push(approximation_error(f, 1.0, o, g.as_ref()).eps_ca);
    }
    Ok((0..graph.len() - 1)
        .map(|t| {
            let eps_ca = eps[t].max(eps[t + 1]);
            let eps_fa = chain.eps_fa[t];
            let prev = gaps[t].powi(2);
            let rhs = lip * n2 * (prev + 2.0 * eps_ca * eps_ca).sqrt() + eps_fa;
            let rhs_statement = lip * n2 * (prev + eps_ca * eps_ca).sqrt() + eps_fa;
            Lemma1Part1Row {
                t,
                lhs: gaps[t + 1],
                rhs,
                rhs_statement,
                eps_ca,
                eps_fa,
                holds: gaps[t + 1] <= rhs + HOLDS_SLACK,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub empirical_ratio: f64,
    pub predicted: f64,
    pub layers: usize,
    pub converged: bool,
}

/// Iterates `x_{l+1} = C x_l` with `C = U diag(G(Λ)) Uᵀ` and measures how
/// fast the alignment with eigenvector `target` decays per layer.
///
/// The iteration runs on eigen-coordinates with renormalization, so the
/// per-layer ratio `|cos(x_{l+1}, p_n)| / |cos(x_l, p_n)|` reduces to
/// `G(λ_n) / ‖G ⊙ x̂_l‖` and never underflows.
pub fn lemma2_ratio_check(
    oracle: &SpectralOracle,
    response: &dyn Fn(f64) -> f64,
    h: &[f64],
    target: usize,
    max_layers: usize,
) -> Result<Lemma2Report> {
    let n = oracle.n();
    if h.len() != n {
        return Err(Error::shape(
            "lemma2_ratio_check",
            format!("signal has {} entries for {n} nodes", h.len()),
        ));
    }
    if target >= n {
        return Err(Error::Index {
            index: target,
            len: n,
        });
    }
    if !(1..=200).contains(&max_layers) {
        return Err(Error::Argument(format!(
            "max_layers must be in 1..=200, got {max_layers}"
        )));
    }
    let g = oracle.spectrum_values(response, 1.0);
    if g.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(
            "response must be positive on the spectrum".into(),
        ));
    }
    let u = oracle.eigenvectors();
    let mut coords: Vec<f64> = (0..n)
        .map(|k| u.column(k).iter().zip(h).map(|(a, b)| a * b).sum())
        .collect();
    let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
    if coords[target].abs() < 1e-12 * norm.max(1.0) || norm == 0.0 {
        return Err(Error::Precondition(
            "signal has no overlap with the target eigenvector".into(),
        ));
    }
    let g_max = g.iter().copied().fold(f64::MIN, f64::max);
    let top_overlap = (0..n)
        .filter(|&k| g[k] >= g_max * (1.0 - 1e-12))
        .map(|k| coords[k] * coords[k])
        .sum::<f64>()
        .sqrt();
    if top_overlap < 1e-12 * norm {
        return Err(Error::Precondition(
            "signal has no overlap with the dominant eigenvector".into(),
        ));
    }
    coords.iter_mut().for_each(|c| *c /= norm);

    let mut ratio = f64::NAN;
    let mut converged = false;
    let mut layers = 0;
    for _ in 0..max_layers {
        layers += 1;
        coords.iter_mut().zip(&g).for_each(|(c, gv)| *c *= gv);
        let next_norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = g[target] / next_norm;
        coords.iter_mut().for_each(|c| *c /= next_norm);
        let done = (r - ratio).abs() < 1e-9;
        ratio = r;
        if done {
            converged = true;
            break;
        }
    }
    Ok(Lemma2Report {
        empirical_ratio: ratio,
        predicted: g[target] / g_max,
        layers,
        converged,
    })
}
