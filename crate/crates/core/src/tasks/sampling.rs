use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;

/// Rejected draws allowed per requested sample.
pub const REJECTION_FACTOR: usize = 100;

/// `n_neg` uniformly drawn ordered pairs `(u, v)`, `u ≠ v`, that are not
/// edges of `g`. Sampling is with replacement.
pub fn negative_sample(
    g: &GraphSnapshot,
    n_neg: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>> {
    if n_neg == 0 {
        return Err(Error::Argument("n_neg must be at least 1".into()));
    }
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::Sampling("fewer than two nodes".into()));
    }
    let mut out = Vec::with_capacity(n_neg);
    let mut rejected = 0;
    while out.len() < n_neg {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && !g.has_edge(u, v) {
            out.push((u, v));
        } else {
            rejected += 1;
            if rejected >= REJECTION_FACTOR * n_neg {
                return Err(Error::Sampling(format!(
                    "no non-edge found after {rejected} draws"
                )));
            }
        }
    }
    Ok(out)
}

/// `k` corrupted tails `w` for source `u`: `w ≠ u` and `(u, w)` not an edge.
/// Returns `None` when `u` is adjacent to every other node.
pub fn corrupt_tails(
    g: &GraphSnapshot,
    u: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Option<Vec<usize>> {
    let n = g.n_nodes();
    let free = n - 1 - g.adjacency().row(u).0.len();
    if free == 0 {
        return None;
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let w = rng.random_range(0..n);
        if w != u && !g.has_edge(u, w) {
            out.push(w);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn snap(n: usize, edges: &[(usize, usize, f64)]) -> GraphSnapshot {
        GraphSnapshot::from_edges(n, edges, Array2::zeros((n, 1)), 0).unwrap()
    }

    #[test]
    fn complete_graph_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = negative_sample(&snap(2, &[(0, 1, 1.0)]), 3, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Sampling(_)));
    }

    #[test]
    fn empty_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = negative_sample(&snap(3, &[]), 2, &mut rng).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|&(u, v)| u != v));
    }

    #[test]
    fn deterministic() {
        let g = snap(6, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let a = negative_sample(&g, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = negative_sample(&g, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&(u, v)| !g.has_edge(u, v)));
    }

    #[test]
    fn tails() {
        let g = snap(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(corrupt_tails(&g, 0, 3, &mut rng).is_none());
        let t = corrupt_tails(&g, 1, 5, &mut rng).unwrap();
        assert!(t.iter().all(|&w| w == 3));
    }
}
