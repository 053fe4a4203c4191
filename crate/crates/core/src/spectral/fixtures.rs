//! Shipped fixtures for the lemma verifiers, and the combined report the
//! CLI prints.

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lemmas::{
    fit_on_oracle, lemma1_part1_check, lemma1_part2_check, lemma2_ratio_check,
    simulate_markov_filters, MarkovFunctional, Response,
};
use super::oracle::SpectralOracle;
use crate::csvfmt::{format_value, Table};
use crate::error::Result;
use crate::graph::{build_laplacian, DynamicGraph, GraphSnapshot, Split};

/// Agreement required between empirical and predicted damping ratios.
pub const LEMMA2_TOLERANCE: f64 = 1e-3;

pub fn heat_kernel() -> Response {
    Arc::new(|l: f64| (-l).exp())
}

/// Weighted Erdős–Rényi graph with edge probability `p` and weights in `[0.5, 1.5)`.
pub fn random_snapshot(n: usize, p: f64, timestep: usize, rng: &mut impl Rng) -> GraphSnapshot {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v, rng.random_range(0.5..1.5)));
            }
        }
    }
    GraphSnapshot::from_edges(n, &edges, Array2::zeros((n, 1)), timestep).expect("valid edges")
}

/// `t` independent random snapshots over `n` nodes.
pub fn random_dynamic_graph(n: usize, t: usize, p: f64, seed: u64) -> DynamicGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snaps = (0..t).map(|k| random_snapshot(n, p, k, &mut rng)).collect();
    DynamicGraph::new(snaps, Split::proportional(t)).expect("valid dynamic graph")
}

/// One randomized temporal-stability trial: two 20-node snapshots with
/// heat-kernel targets and order-10 fits. Returns whether every row holds.
pub fn lemma1_part2_trial(seed: u64) -> Result<bool> {
    let g = random_dynamic_graph(20, 2, 0.2, seed);
    let heat = heat_kernel();
    let mut learned = Vec::new();
    for s in g.snapshots() {
        let o = SpectralOracle::new(&build_laplacian(s))?;
        learned.push(fit_on_oracle(&o, heat.as_ref(), 10)?);
    }
    let rows = lemma1_part2_check(&g, &[heat.clone(), heat], &learned)?;
    Ok(rows.iter().all(|r| r.holds))
}

/// The three synthetic Markov processes: identity, halving and constant.
pub fn markov_fixtures() -> Vec<(&'static str, MarkovFunctional)> {
    vec![
        ("identity", MarkovFunctional::Identity),
        ("half", MarkovFunctional::Scale(0.5)),
        (
            "constant",
            MarkovFunctional::Constant(Arc::new(|l: f64| 1.0 / (1.0 + l))),
        ),
    ]
}

/// Named graphs with a positive response and a signal for the damping check.
pub struct Lemma2Fixture {
    pub name: &'static str,
    pub edges: Vec<(usize, usize)>,
    pub n: usize,
    pub response: Response,
    pub signal: Vec<f64>,
    /// Eigenvalue index whose alignment is tracked.
    pub target: usize,
}

fn path_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n - 1).map(|i| (i, i + 1)).collect()
}

fn grid_edges(side: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            if c + 1 < side {
                e.push((i, i + 1));
            }
            if r + 1 < side {
                e.push((i, i + side));
            }
        }
    }
    e
}

pub fn lemma2_fixtures() -> Vec<Lemma2Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut signal =
        |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    vec![
        Lemma2Fixture {
            name: "cycle4_shifted_linear",
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            n: 4,
            response: Arc::new(|l| l + 0.1),
            signal: vec![1.0, 0.2, -0.4, 0.7],
            target: 0,
        },
        Lemma2Fixture {
            name: "path2_heat",
            edges: path_edges(2),
            n: 2,
            response: heat_kernel(),
            signal: vec![1.0, 0.0],
            target: 1,
        },
        Lemma2Fixture {
            name: "path8_heat",
            edges: path_edges(8),
            n: 8,
            response: heat_kernel(),
            signal: signal(8),
            target: 3,
        },
        Lemma2Fixture {
            name: "grid3_lowpass",
            edges: grid_edges(3),
            n: 9,
            response: Arc::new(|l| 1.0 / (1.0 + l)),
            signal: signal(9),
            target: 8,
        },
    ]
}

impl Lemma2Fixture {
    pub fn oracle(&self) -> Result<SpectralOracle> {
        let w: Vec<_> = self.edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let g = GraphSnapshot::from_edges(self.n, &w, Array2::zeros((self.n, 1)), 0)?;
        SpectralOracle::new(&build_laplacian(&g))
    }
}

/// One line of the verifier report.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRow {
    pub check: &'static str,
    pub fixture: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Runs every shipped fixture. For the damping check `lhs` is the
/// empirical ratio and `rhs` the predicted one.
pub fn verify_lemmas() -> Result<Vec<LemmaRow>> {
    let mut rows = Vec::new();
    let g = random_dynamic_graph(10, 4, 0.35, 7);
    for (name, functional) in markov_fixtures() {
        let chain = simulate_markov_filters(&g, &functional, heat_kernel(), 20)?;
        for r in lemma1_part1_check(&g, &functional, &chain)? {
            rows.push(LemmaRow {
                check: "lemma1_part1",
                fixture: format!("{name}/t{}", r.t),
                lhs: r.lhs,
                rhs: r.rhs,
                pass: r.holds,
            });
        }
    }
    let g = random_dynamic_graph(20, 5, 0.2, 11);
    let heat = heat_kernel();
    let mut learned = Vec::new();
    for s in g.snapshots() {
        let o = SpectralOracle::new(&build_laplacian(s))?;
        learned.push(fit_on_oracle(&o, heat.as_ref(), 10)?);
    }
    let desired = vec![heat; g.len()];
    for r in lemma1_part2_check(&g, &desired, &learned)? {
        rows.push(LemmaRow {
            check: "lemma1_part2",
            fixture: format!("random20/t{}", r.t),
            lhs: r.lhs,
            rhs: r.rhs,
            pass: r.holds,
        });
    }
    for fx in lemma2_fixtures() {
        let r = lemma2_ratio_check(
            &fx.oracle()?,
            fx.response.as_ref(),
            &fx.signal,
            fx.target,
            200,
        )?;
        rows.push(LemmaRow {
            check: "lemma2",
            fixture: fx.name.into(),
            lhs: r.empirical_ratio,
            rhs: r.predicted,
            pass: (r.empirical_ratio - r.predicted).abs() <= LEMMA2_TOLERANCE,
        });
    }
    Ok(rows)
}

pub fn lemma_table(rows: &[LemmaRow]) -> Table {
    let mut t = Table::new(["check", "fixture", "lhs", "rhs", "result"]);
    for r in rows {
        t.push(vec![
            r.check.into(),
            r.fixture.clone(),
            format_value(r.lhs),
            format_value(r.rhs),
            if r.pass { "PASS" } else { "FAIL" }.into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_fixtures_pass() {
        let rows = verify_lemmas().unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
        assert_eq!(rows.iter().filter(|r| r.check == "lemma2").count(), 4);
        assert_eq!(rows.iter().filter(|r| r.check == "lemma1_part1").count(), 9);
        let c4 = rows
            .iter()
            .find(|r| r.fixture == "cycle4_shifted_linear")
            .unwrap();
        assert!((c4.rhs - 0.1 / 4.1).abs() < 1e-12);
    }

    #[test]
    fn random_graphs_are_seeded() {
        assert_eq!(
            random_dynamic_graph(12, 3, 0.3, 5),
            random_dynamic_graph(12, 3, 0.3, 5)
        );
        assert_ne!(
            random_dynamic_graph(12, 3, 0.3, 5),
            random_dynamic_graph(12, 3, 0.3, 6)
        );
    }

    #[test]
    fn table_layout() {
        let rows = vec![LemmaRow {
            check: "lemma2",
            fixture: "x".into(),
            lhs: 0.5,
            rhs: 0.25,
            pass: false,
        }];
        assert_eq!(
            lemma_table(&rows).to_csv(),
            "check,fixture,lhs,rhs,result\nlemma2,x,0.5,0.25,FAIL\n"
        );
    }
}
