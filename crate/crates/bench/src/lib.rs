//! Benchmark fixtures.

use deft_core::model::Aggregator;
use deft_core::scaling::random_regular_graph;
use deft_core::{DeftConfig, DeftModel, Result, SnapshotContext, Tape};

pub const DEGREE: usize = 8;
pub const FEATURES: usize = 16;

/// A model and a prepared context on a random 8-regular graph with `n` nodes.
pub fn forward_fixture(n: usize, cfg: &DeftConfig) -> Result<(DeftModel, SnapshotContext)> {
    let g = random_regular_graph(n, DEGREE, FEATURES, n as u64)?;
    let ctx = SnapshotContext::new(&g, cfg)?;
    Ok((DeftModel::new(cfg.clone(), FEATURES, 0)?, ctx))
}

/// One evolution step plus one snapshot forward pass; returns the output sum.
pub fn forward_once(model: &DeftModel, ctx: &SnapshotContext) -> Result<f64> {
    let mut tape = Tape::new();
    let s0 = model.initial_state(&mut tape);
    let x = tape.constant(ctx.features.clone())?;
    let s1 = model.evolve(&mut tape, &s0, ctx, x)?;
    let out = model.forward_snapshot(&mut tape, &s1, ctx, None)?;
    Ok(tape.value(out).sum())
}

pub fn with_aggregator(aggregator: Aggregator) -> DeftConfig {
    DeftConfig {
        aggregator,
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_builds() {
        let (m, ctx) = forward_fixture(64, &DeftConfig::default()).unwrap();
        assert_eq!(ctx.n_nodes(), 64);
        assert_eq!(m.config().hidden_dim, 64);
        assert!(forward_once(&m, &ctx).unwrap().is_finite());
    }
}
