//! Sparse graph snapshots, Laplacians and spectral range estimates.

mod laplacian;
mod snapshot;
mod sparse;

pub use laplacian::{
    build_laplacian, build_laplacian_with, estimate_lambda_max, LambdaEstimate, LambdaMode,
    LaplacianKind, POWER_ITERATION_MAX_ITERS, POWER_ITERATION_TOL,
};
pub use snapshot::{neighbors, DynamicGraph, EdgeLabels, GraphSnapshot, Split};
pub use sparse::SparseMatrix;
