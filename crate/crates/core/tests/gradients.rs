//! End-to-end gradient checks of the one-snapshot loss.
//!
//! Step 1e-4 balances truncation against rounding for this loss; larger
//! steps cross leaky-ReLU kinks, smaller ones drown the smallest gradients
//! in rounding noise.

mod common;

use deft_core::model::{Aggregator, RnnStyle, SpectralMode};
use deft_core::nn::GradCheck;
use deft_core::DeftConfig;

fn check(cfg: DeftConfig) -> f64 {
    let opts = GradCheck {
        step: 1e-4,
        max_coords_per_param: Some(40),
        seed: 0,
    };
    common::one_snapshot_gradcheck(&cfg, opts).max_rel_error
}

#[test]
fn every_aggregator_and_rnn_style() {
    for aggregator in [
        Aggregator::SparseTransformer,
        Aggregator::GatStyle,
        Aggregator::Mlp,
    ] {
        for rnn_style in [RnnStyle::WeightsAsState, RnnStyle::InputDriven] {
            let err = check(DeftConfig {
                aggregator,
                rnn_style,
                ..common::small_config()
            });
            assert!(err < 1e-4, "{aggregator:?} {rnn_style:?}: {err:e}");
        }
    }
}

#[test]
fn ablations_and_per_scale_heads() {
    for cfg in [
        DeftConfig {
            spectral: SpectralMode::Static,
            ..common::small_config()
        },
        DeftConfig {
            spectral: SpectralMode::Off,
            ..common::small_config()
        },
        DeftConfig {
            spatial: false,
            ..common::small_config()
        },
        DeftConfig {
            per_scale_coefficients: true,
            filter_heads: 2,
            ..common::small_config()
        },
        DeftConfig {
            n_layers: 2,
            ..common::small_config()
        },
    ] {
        let err = check(cfg.clone());
        assert!(err < 1e-4, "{cfg:?}: {err:e}");
    }
}
