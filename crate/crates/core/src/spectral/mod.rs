//! Chebyshev wavelet filters, the dense spectral oracle and lemma verifiers.

mod chebyshev;
pub mod fixtures;
mod lemmas;
mod oracle;
mod wavelet;

pub use chebyshev::{
    all_pass_coefficients, apply_filter, apply_filter_bounded, chebyshev_series, chebyshev_terms,
    combine_terms, default_quadrature_points, effective_scale, evaluate_filter, fit_chebyshev,
    ChebyshevFilter, ClampMode, ScaleSet,
};
pub use lemmas::{
    approximation_error, fit_on_oracle, lemma1_part1_check, lemma1_part2_check, lemma2_ratio_check,
    simulate_markov_filters, ApproximationError, Lemma1Part1Row, Lemma1Part2Row, Lemma2Report,
    MarkovChain, MarkovFunctional, Response,
};
pub use oracle::{convolution_support, exact_filter_apply, SpectralOracle};
pub use wavelet::{filter_response_table, wavelet_table, wavelet_vector, FilterResponseTable};

/// Smallest `λ_max` handed to a filter, so edgeless graphs still get a valid domain.
pub const MIN_FILTER_LAMBDA_MAX: f64 = 1e-6;

/// Filter domain for an estimated spectral radius: `1.01·λ̂`, floored.
pub fn filter_lambda_max(lambda_hat: f64) -> f64 {
    (1.01 * lambda_hat).max(MIN_FILTER_LAMBDA_MAX)
}
