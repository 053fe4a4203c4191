//! Dynamic graph learning with time-evolving spectral wavelet filters.

pub mod config;
pub mod csvfmt;
pub mod data;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod scaling;
pub mod spectral;
pub mod tasks;

pub use config::{ConfigFile, Configurable};
pub use data::SbmConfig;
pub use error::{Error, Result};
pub use graph::{DynamicGraph, GraphSnapshot, SparseMatrix, Split};
pub use model::{DeftConfig, DeftModel, SnapshotContext};
pub use nn::{Checkpoint, ParamStore, Tape};
pub use spectral::{ChebyshevFilter, ClampMode, ScaleSet};
pub use tasks::{MetricsReport, TaskKind, TaskModel, TaskSpec, TrainConfig};
