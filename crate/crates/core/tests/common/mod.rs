#![allow(dead_code)]

use deft_core::model::prepare_contexts;
use deft_core::nn::{gradient_check, GradCheck, GradCheckReport};
use deft_core::{DeftConfig, DynamicGraph, GraphSnapshot, Split, TaskModel, TaskSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weighted 6-node graph with a chord, random 3-dim features.
pub fn six_node_graph() -> DynamicGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let edges = [
        (0, 1, 1.0),
        (1, 2, 0.5),
        (2, 3, 1.0),
        (3, 4, 2.0),
        (4, 5, 1.0),
        (0, 5, 1.0),
        (1, 4, 1.0),
    ];
    let x = Array2::from_shape_simple_fn((6, 3), || rng.random_range(-1.0..1.0));
    let s = GraphSnapshot::from_edges(6, &edges, x, 0).unwrap();
    DynamicGraph::new(vec![s], Split::proportional(1)).unwrap()
}

/// Smallest configuration in the search space.
pub fn small_config() -> DeftConfig {
    DeftConfig {
        hidden_dim: 32,
        filter_order: 4,
        ..Default::default()
    }
}

/// Gradient check of the link-prediction cross-entropy on one snapshot,
/// at the freshly initialised parameters.
pub fn one_snapshot_gradcheck(cfg: &DeftConfig, opts: GradCheck) -> GradCheckReport {
    let g = six_node_graph();
    let mut tm = TaskModel::new(cfg.clone(), TaskSpec::default(), 3, 2).unwrap();
    let ctxs = prepare_contexts(&g, cfg).unwrap();
    let model = tm.model.clone();
    let head = tm.head;
    gradient_check(
        |tape, store| {
            let mut m = model.clone();
            m.store = store.clone();
            let e = m.embed(tape, &ctxs, &[0])?[0];
            let logits = head.pair_logits(
                tape,
                store,
                e,
                vec![0, 1, 2, 3, 5, 4],
                vec![1, 3, 5, 0, 2, 4],
            )?;
            tape.cross_entropy(logits, &[1, 0, 1, 0, 1, 0], None)
        },
        &mut tm.model.store,
        opts,
    )
    .unwrap()
}
