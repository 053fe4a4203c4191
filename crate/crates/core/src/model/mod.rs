//! The evolving spectral-spatial embedding model and its building blocks.

mod config;
mod deft;
mod ops;

pub use config::{
    parse_aggregator, Aggregator, DeftConfig, Pooling, RnnStyle, SpectralMode, AGGREGATORS,
    FILTER_ORDERS, HEAD_COUNTS, HIDDEN_DIMS, SCALE_RANGE,
};
pub use deft::{prepare_contexts, DeftModel, EvolvedState, SnapshotContext, UPDATE_GATE_BIAS_INIT};
pub use ops::{
    am_forward, am_forward_with_weights, constant_rows, fourier_features, fourier_vector,
    gat_forward, message_passing_layer, propagation_matrix, timestep_encoding, AttentionHead,
    GatHead, GAT_SLOPE,
};
