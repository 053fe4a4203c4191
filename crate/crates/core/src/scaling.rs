//! Forward-pass timing on random regular graphs.

use std::collections::HashSet;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csvfmt::Table;
use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::model::{DeftConfig, DeftModel, SnapshotContext};
use crate::nn::Tape;

pub const TIMING_REPEATS: usize = 5;

/// Uniformish random `degree`-regular graph: a circulant graph scrambled
/// by `10·|E|` degree-preserving double-edge swaps.
pub fn random_regular_graph(
    n: usize,
    degree: usize,
    d_in: usize,
    seed: u64,
) -> Result<GraphSnapshot> {
    if !degree.is_multiple_of(2) || degree == 0 || degree >= n {
        return Err(Error::Argument(format!(
            "degree must be even, positive and below n, got {degree} for n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * degree / 2);
    for i in 0..n {
        for k in 1..=degree / 2 {
            edges.push(key(i, (i + k) % n));
        }
    }
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    for _ in 0..10 * edges.len() {
        let (a, b) = (
            rng.random_range(0..edges.len()),
            rng.random_range(0..edges.len()),
        );
        let ((u, v), (x, y)) = (edges[a], edges[b]);
        // rewire u-v, x-y into u-x, v-y or u-y, v-x
        let (p, q) = if rng.random_bool(0.5) {
            (key(u, x), key(v, y))
        } else {
            (key(u, y), key(v, x))
        };
        if p.0 == p.1 || q.0 == q.1 || p == q || present.contains(&p) || present.contains(&q) {
            continue;
        }
        present.remove(&edges[a]);
        present.remove(&edges[b]);
        present.insert(p);
        present.insert(q);
        edges[a] = p;
        edges[b] = q;
    }
    let list: Vec<_> = edges.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    let x = Array2::from_shape_simple_fn((n, d_in), || rng.random_range(-1.0..1.0));
    GraphSnapshot::from_edges(n, &list, x, 0)
}

/// Median wall time in seconds of one single-snapshot forward pass
/// (weight evolution included, context preparation excluded).
pub fn time_forward(model: &DeftModel, ctx: &SnapshotContext, repeats: usize) -> Result<f64> {
    let run = || -> Result<f64> {
        let start = Instant::now();
        let mut tape = Tape::new();
        let s0 = model.initial_state(&mut tape);
        let x = tape.constant(ctx.features.clone())?;
        let s1 = model.evolve(&mut tape, &s0, ctx, x)?;
        let out = model.forward_snapshot(&mut tape, &s1, ctx, None)?;
        std::hint::black_box(tape.value(out));
        Ok(start.elapsed().as_secs_f64())
    };
    run()?;
    let mut times = (0..repeats.max(1))
        .map(|_| run())
        .collect::<Result<Vec<_>>>()?;
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln(seconds)` against `ln(n_nodes)`.
    pub slope: f64,
}

impl ScalingReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["n_nodes", "n_edges", "seconds"]);
        for r in &self.rows {
            t.push_values(&[r.n_nodes as f64, r.n_edges as f64, r.seconds]);
        }
        t
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Times the forward pass on random `degree`-regular graphs of each size.
pub fn bench_scaling(
    sizes: &[usize],
    degree: usize,
    d_in: usize,
    config: &DeftConfig,
    seed: u64,
) -> Result<ScalingReport> {
    if sizes.len() < 4 {
        return Err(Error::Argument(
            "scaling benchmark needs at least 4 sizes".into(),
        ));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("sizes must be strictly ascending".into()));
    }
    let model = DeftModel::new(config.clone(), d_in, seed)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let g = random_regular_graph(n, degree, d_in, seed ^ n as u64)?;
        let ctx = SnapshotContext::new(&g, config)?;
        rows.push(ScalingRow {
            n_nodes: n,
            n_edges: g.n_edges(),
            seconds: time_forward(&model, &ctx, TIMING_REPEATS)?,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n_nodes as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.seconds.ln()).collect();
    Ok(ScalingReport {
        slope: fit_slope(&lx, &ly),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_graph_degrees() {
        let g = random_regular_graph(50, 4, 3, 1).unwrap();
        assert!((0..50).all(|i| g.degree(i) == 4.0));
        assert_eq!(g.n_edges(), 100);
        assert!(random_regular_graph(10, 3, 1, 0).is_err());
        // swaps actually happened
        let ring = (0..50).all(|i| g.has_edge(i, (i + 1) % 50));
        assert!(!ring);
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [3.0f64, 6.0, 12.0, 24.0].iter().map(|v| v.ln()).collect();
        assert!((fit_slope(&x, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bench_rejects_bad_sizes() {
        let cfg = DeftConfig::default();
        assert!(bench_scaling(&[10, 20, 30], 4, 2, &cfg, 0).is_err());
        assert!(bench_scaling(&[10, 30, 20, 40], 4, 2, &cfg, 0).is_err());
    }

    #[test]
    fn small_bench_runs() {
        let cfg = DeftConfig {
            hidden_dim: 32,
            filter_order: 4,
            ..Default::default()
        };
        let r = bench_scaling(&[16, 32, 64, 128], 4, 2, &cfg, 0).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.seconds > 0.0));
        assert!(r.slope.is_finite());
    }
}
