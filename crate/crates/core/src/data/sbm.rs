use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{name_of, one_of, parse_bool, parse_value, Configurable};
use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, EdgeLabels, GraphSnapshot, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// One-hot community plus Gaussian noise.
    #[default]
    CommunityOnehotNoisy,
    /// Standard Gaussian entries, independent of structure.
    Random,
}

const FEATURE_MODES: [(&str, FeatureMode); 2] = [
    ("community_onehot_noisy", FeatureMode::CommunityOnehotNoisy),
    ("random", FeatureMode::Random),
];

/// Drifting stochastic block model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    pub n_nodes: usize,
    pub n_communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub n_snapshots: usize,
    pub drift_fraction: f64,
    pub feature_mode: FeatureMode,
    pub noise_std: f64,
    pub seed: u64,
    /// Required to allow `p_in < p_out`.
    pub heterophilic: bool,
    /// Label edges 0 (same community) or 1 (across communities).
    pub edge_labels: bool,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n_nodes: 100,
            n_communities: 3,
            p_in: 0.2,
            p_out: 0.02,
            n_snapshots: 20,
            drift_fraction: 0.05,
            feature_mode: FeatureMode::CommunityOnehotNoisy,
            noise_std: 0.1,
            seed: 0,
            heterophilic: false,
            edge_labels: false,
        }
    }
}

/// Named parameter sets.
pub const PRESETS: [&str; 4] = ["default", "separable", "brain_like", "elliptic_like"];

impl SbmConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        Ok(match name {
            "default" => base,
            // disjoint cliques: links are separable from the community one-hots
            "separable" => Self {
                n_communities: 4,
                p_in: 1.0,
                p_out: 0.0,
                drift_fraction: 0.01,
                noise_std: 0.2,
                ..base
            },
            "brain_like" => Self {
                n_communities: 4,
                p_in: 0.05,
                p_out: 0.1,
                heterophilic: true,
                ..base
            },
            "elliptic_like" => Self {
                n_communities: 2,
                p_in: 0.1,
                p_out: 0.01,
                edge_labels: true,
                ..base
            },
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset `{name}`, expected one of {}",
                    PRESETS.join("|")
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        for (k, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{k} must lie in [0, 1], got {p}"));
            }
        }
        if self.p_in < self.p_out && !self.heterophilic {
            return fail(format!(
                "p_in {} < p_out {} requires heterophilic = true",
                self.p_in, self.p_out
            ));
        }
        if !(0.0..=1.0).contains(&self.drift_fraction) {
            return fail(format!(
                "drift_fraction must lie in [0, 1], got {}",
                self.drift_fraction
            ));
        }
        if self.n_communities < 2 {
            return fail("n_communities must be at least 2".into());
        }
        if self.n_nodes < self.n_communities {
            return fail("need at least one node per community".into());
        }
        if self.n_snapshots == 0 {
            return fail("n_snapshots must be at least 1".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail(format!(
                "noise_std must be non-negative, got {}",
                self.noise_std
            ));
        }
        Ok(())
    }

    /// Nodes reassigned per step.
    pub fn moved_per_step(&self) -> usize {
        (self.drift_fraction * self.n_nodes as f64).ceil() as usize
    }
}

impl Configurable for SbmConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "n_nodes" => self.n_nodes = parse_value(key, value)?,
            "n_communities" => self.n_communities = parse_value(key, value)?,
            "p_in" => self.p_in = parse_value(key, value)?,
            "p_out" => self.p_out = parse_value(key, value)?,
            "n_snapshots" => self.n_snapshots = parse_value(key, value)?,
            "drift_fraction" => self.drift_fraction = parse_value(key, value)?,
            "feature_mode" => self.feature_mode = one_of(key, value, &FEATURE_MODES)?,
            "noise_std" => self.noise_std = parse_value(key, value)?,
            "data_seed" => self.seed = parse_value(key, value)?,
            "heterophilic" => self.heterophilic = parse_bool(key, value)?,
            "edge_labels" => self.edge_labels = parse_bool(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(String, String)> {
        [
            ("n_nodes", self.n_nodes.to_string()),
            ("n_communities", self.n_communities.to_string()),
            ("p_in", self.p_in.to_string()),
            ("p_out", self.p_out.to_string()),
            ("n_snapshots", self.n_snapshots.to_string()),
            ("drift_fraction", self.drift_fraction.to_string()),
            (
                "feature_mode",
                name_of(self.feature_mode, &FEATURE_MODES).into(),
            ),
            ("noise_std", self.noise_std.to_string()),
            ("data_seed", self.seed.to_string()),
            ("heterophilic", self.heterophilic.to_string()),
            ("edge_labels", self.edge_labels.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

fn edge_probability(cfg: &SbmConfig, a: usize, b: usize) -> f64 {
    if a == b {
        cfg.p_in
    } else {
        cfg.p_out
    }
}

fn features(cfg: &SbmConfig, community: &[usize], rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (n, c) = (cfg.n_nodes, cfg.n_communities);
    match cfg.feature_mode {
        FeatureMode::Random => {
            let unit = Normal::new(0.0, 1.0).expect("valid normal");
            Array2::from_shape_simple_fn((n, c), || unit.sample(rng))
        }
        FeatureMode::CommunityOnehotNoisy => {
            let noise = Normal::new(0.0, cfg.noise_std).expect("validated std");
            Array2::from_shape_fn((n, c), |(i, j)| {
                let hot = if community[i] == j { 1.0 } else { 0.0 };
                hot + noise.sample(rng)
            })
        }
    }
}

fn snapshot(
    cfg: &SbmConfig,
    t: usize,
    edges: &BTreeSet<(usize, usize)>,
    community: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<GraphSnapshot> {
    let list: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
    let x = features(cfg, community, rng);
    let mut g = GraphSnapshot::from_edges(cfg.n_nodes, &list, x, t)?
        .with_node_labels(community.to_vec())?;
    if cfg.edge_labels && !edges.is_empty() {
        let labels: EdgeLabels = edges
            .iter()
            .map(|&(u, v)| ((u, v), usize::from(community[u] != community[v])))
            .collect();
        g = g.with_edge_labels(labels)?;
    }
    Ok(g)
}

/// Samples the dynamic SBM. Node labels are the current communities.
pub fn generate_dynamic_sbm(cfg: &SbmConfig) -> Result<DynamicGraph> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // contiguous, balanced blocks
    let mut community: Vec<usize> = (0..n).map(|i| i * cfg.n_communities / n).collect();
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(edge_probability(cfg, community[u], community[v])) {
                edges.insert((u, v));
            }
        }
    }
    let mut snaps = vec![snapshot(cfg, 0, &edges, &community, &mut rng)?];
    let moves = cfg.moved_per_step();
    for t in 1..cfg.n_snapshots {
        let moved: BTreeSet<usize> = sample(&mut rng, n, moves).into_iter().collect();
        for &m in &moved {
            // a uniformly chosen community other than the current one
            let shift = rng.random_range(1..cfg.n_communities);
            community[m] = (community[m] + shift) % cfg.n_communities;
        }
        edges.retain(|(u, v)| !moved.contains(u) && !moved.contains(v));
        for &m in &moved {
            for j in 0..n {
                if j == m || (moved.contains(&j) && j < m) {
                    continue;
                }
                if rng.random_bool(edge_probability(cfg, community[m], community[j])) {
                    edges.insert((m.min(j), m.max(j)));
                }
            }
        }
        snaps.push(snapshot(cfg, t, &edges, &community, &mut rng)?);
    }
    DynamicGraph::new(snaps, Split::proportional(cfg.n_snapshots))
}

/// Fraction of edges whose endpoints share a node label.
pub fn homophily_ratio(g: &GraphSnapshot) -> Result<f64> {
    let labels = g
        .node_labels()
        .ok_or_else(|| Error::Precondition("snapshot has no node labels".into()))?;
    let edges: Vec<_> = g.edges();
    if edges.is_empty() {
        return Err(Error::Undefined("homophily of an edgeless snapshot".into()));
    }
    let same = edges
        .iter()
        .filter(|(u, v, _)| labels[*u] == labels[*v])
        .count();
    Ok(same as f64 / edges.len() as f64)
}

/// Per-snapshot homophily ratios (edgeless snapshots skipped) and their mean.
pub fn heterophily_ratio(graph: &DynamicGraph) -> Result<(BTreeMap<usize, f64>, f64)> {
    let mut per = BTreeMap::new();
    for (t, g) in graph.snapshots().iter().enumerate() {
        match homophily_ratio(g) {
            Ok(r) => {
                per.insert(t, r);
            }
            Err(Error::Undefined(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if per.is_empty() {
        return Err(Error::Undefined("no snapshot has edges".into()));
    }
    let mean = per.values().sum::<f64>() / per.len() as f64;
    Ok((per, mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_cliques() {
        let cfg = SbmConfig {
            n_nodes: 10,
            n_communities: 2,
            p_in: 1.0,
            p_out: 0.0,
            n_snapshots: 4,
            drift_fraction: 0.0,
            ..Default::default()
        };
        let g = generate_dynamic_sbm(&cfg).unwrap();
        assert_eq!(g.len(), 4);
        for s in g.snapshots() {
            assert_eq!(s.n_edges(), 20);
            for u in 0..10 {
                for v in 0..10 {
                    assert_eq!(s.has_edge(u, v), u != v && u / 5 == v / 5);
                }
            }
            assert_eq!(homophily_ratio(s).unwrap(), 1.0);
        }
    }

    #[test]
    fn drift_moves_exact_count_and_keeps_other_edges() {
        let cfg = SbmConfig {
            n_nodes: 60,
            drift_fraction: 0.07,
            seed: 3,
            ..Default::default()
        };
        let g = generate_dynamic_sbm(&cfg).unwrap();
        for w in g.snapshots().windows(2) {
            let (a, b) = (w[0].node_labels().unwrap(), w[1].node_labels().unwrap());
            let moved: Vec<usize> = (0..60).filter(|&i| a[i] != b[i]).collect();
            assert_eq!(moved.len(), 5);
            for (u, v, _) in w[0].edges() {
                if !moved.contains(&u) && !moved.contains(&v) {
                    assert!(w[1].has_edge(u, v));
                }
            }
        }
    }

    #[test]
    fn configuration_errors() {
        let bad = SbmConfig {
            p_in: 0.01,
            p_out: 0.1,
            ..Default::default()
        };
        assert!(generate_dynamic_sbm(&bad).is_err());
        let ok = SbmConfig {
            heterophilic: true,
            ..bad
        };
        assert!(generate_dynamic_sbm(&ok).is_ok());
        let bad = SbmConfig {
            p_in: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        for p in PRESETS {
            SbmConfig::preset(p).unwrap().validate().unwrap();
        }
        assert!(SbmConfig::preset("nope").is_err());
    }

    #[test]
    fn homophily_examples() {
        let x = Array2::zeros((4, 1));
        let bip = GraphSnapshot::from_edges(
            4,
            &[(0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)],
            x,
            0,
        )
        .unwrap()
        .with_node_labels(vec![0, 0, 1, 1])
        .unwrap();
        assert_eq!(homophily_ratio(&bip).unwrap(), 0.0);
        let k3 = GraphSnapshot::from_edges(
            3,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)],
            Array2::zeros((3, 1)),
            0,
        )
        .unwrap();
        assert!(homophily_ratio(&k3).is_err());
        let k3 = k3.with_node_labels(vec![0, 0, 1]).unwrap();
        assert!((homophily_ratio(&k3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn presets_have_expected_homophily() {
        let brain = generate_dynamic_sbm(&SbmConfig::preset("brain_like").unwrap()).unwrap();
        let (_, mean) = heterophily_ratio(&brain).unwrap();
        assert!(mean < 0.3, "{mean}");
        let ell = generate_dynamic_sbm(&SbmConfig::preset("elliptic_like").unwrap()).unwrap();
        assert!(heterophily_ratio(&ell).unwrap().1 > 0.7);
        assert!(ell.snapshot(0).edge_labels().is_some());
    }
}
