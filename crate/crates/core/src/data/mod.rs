//! Synthetic dynamic graphs and the snapshot file format.

mod format;
mod sbm;

pub use format::{
    load_snapshots, parse_snapshots, save_snapshots, snapshots_to_text, SNAPSHOTS_HEADER,
};
pub use sbm::{
    generate_dynamic_sbm, heterophily_ratio, homophily_ratio, FeatureMode, SbmConfig, PRESETS,
};
