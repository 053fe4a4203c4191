use std::ops::Range;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heads::{TaskHead, TaskKind, TaskSpec};
use super::metrics::{average_precision_scored, mean_rank, micro_f1, minority_f1, mrr};
use super::sampling::{corrupt_tails, negative_sample};
use crate::config::{parse_bool, parse_value, Configurable};
use crate::csvfmt::Table;
use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, GraphSnapshot};
use crate::model::{prepare_contexts, DeftConfig, DeftModel, SnapshotContext};
use crate::nn::{Adam, Checkpoint, Tape, Var};

/// Optimisation and evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Cap on positive pairs per timestep; larger sets are subsampled.
    pub max_positives: usize,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
    pub eval_seed: u64,
    /// Weight classes by inverse batch frequency.
    pub balanced_loss: bool,
    /// Validation period in epochs; 0 evaluates only after the last epoch.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.005,
            max_positives: 1000,
            grad_clip: 5.0,
            eval_seed: 20_240,
            balanced_loss: false,
            eval_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.max_positives == 0 {
            return Err(Error::Config("max_positives must be at least 1".into()));
        }
        if self.grad_clip.is_nan() || self.grad_clip < 0.0 {
            return Err(Error::Config("grad_clip must be non-negative".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> Adam {
        let mut adam = Adam::new(self.learning_rate);
        adam.max_grad_norm = (self.grad_clip > 0.0).then_some(self.grad_clip);
        adam
    }
}

impl Configurable for TrainConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "epochs" => self.epochs = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "max_positives" => self.max_positives = parse_value(key, value)?,
            "grad_clip" => self.grad_clip = parse_value(key, value)?,
            "eval_seed" => self.eval_seed = parse_value(key, value)?,
            "balanced_loss" => self.balanced_loss = parse_bool(key, value)?,
            "eval_every" => self.eval_every = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(String, String)> {
        [
            ("epochs", self.epochs.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("max_positives", self.max_positives.to_string()),
            ("grad_clip", self.grad_clip.to_string()),
            ("eval_seed", self.eval_seed.to_string()),
            ("balanced_loss", self.balanced_loss.to_string()),
            ("eval_every", self.eval_every.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Val,
    Test,
}

/// Metrics for one run; fields outside the task kind stay `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub mrr: Option<f64>,
    pub map: Option<f64>,
    pub micro_f1: Option<f64>,
    pub minority_f1: Option<f64>,
    pub loss_per_epoch: Vec<f64>,
}

impl MetricsReport {
    /// MAP for link prediction, minority F1 otherwise.
    pub fn primary(&self) -> Option<f64> {
        self.map.or(self.minority_f1)
    }

    pub fn populated(&self) -> Vec<(&'static str, f64)> {
        [
            ("mrr", self.mrr),
            ("map", self.map),
            ("micro_f1", self.micro_f1),
            ("minority_f1", self.minority_f1),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    /// `metric,value` table.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["metric", "value"]);
        for (k, v) in self.populated() {
            t.push(vec![k.to_string(), crate::csvfmt::format_value(v)]);
        }
        t
    }

    /// `epoch,loss` table, epochs counted from 1.
    pub fn loss_table(&self) -> Table {
        let mut t = Table::new(["epoch", "loss"]);
        for (e, &l) in self.loss_per_epoch.iter().enumerate() {
            t.push_values(&[(e + 1) as f64, l]);
        }
        t
    }
}

/// A DEFT encoder with a task head sharing its parameter store.
#[derive(Debug, Clone)]
pub struct TaskModel {
    pub model: DeftModel,
    pub head: TaskHead,
    pub task: TaskSpec,
}

impl TaskModel {
    pub fn new(config: DeftConfig, task: TaskSpec, d_in: usize, seed: u64) -> Result<Self> {
        task.validate()?;
        let mut model = DeftModel::new(config, d_in, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a5c_4ead);
        let dim = model.embedding_dim();
        let head = TaskHead::register(&mut model.store, &task, dim, &mut rng)?;
        Ok(Self { model, head, task })
    }

    /// Parameters plus everything needed to rebuild the architecture.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut config = vec![("d_in".to_string(), self.model.input_dim().to_string())];
        config.extend(self.model.config().entries());
        config.extend(self.task.entries());
        Checkpoint::from_store(&self.model.store, config)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let d_in = ckpt
            .config_value("d_in")
            .ok_or_else(|| Error::Config("checkpoint lacks `d_in`".into()))?;
        let d_in: usize = parse_value("d_in", d_in)?;
        let mut config = DeftConfig::default();
        let mut task = TaskSpec::default();
        for (k, v) in ckpt.config.iter().filter(|(k, _)| k != "d_in") {
            if !config.set(k, v)? && !task.set(k, v)? {
                return Err(Error::Config(format!("unknown checkpoint key `{k}`")));
            }
        }
        config.validate()?;
        let mut tm = Self::new(config, task, d_in, 0)?;
        ckpt.restore_into(&mut tm.model.store)?;
        Ok(tm)
    }
}

/// Snapshot indices whose labels or edges are predicted in `phase`.
/// Link prediction reads the embedding one step earlier.
pub fn target_range(kind: TaskKind, graph: &DynamicGraph, phase: Phase) -> Range<usize> {
    let s = graph.split();
    let first = if kind == TaskKind::LinkPrediction {
        1
    } else {
        0
    };
    let r = match phase {
        Phase::Train => 0..s.train_end,
        Phase::Val => s.train_end..s.val_end,
        Phase::Test => s.val_end..s.test_end,
    };
    r.start.max(first)..r.end
}

fn embedding_step(kind: TaskKind, target: usize) -> usize {
    if kind == TaskKind::LinkPrediction {
        target - 1
    } else {
        target
    }
}

fn directed_edges(g: &GraphSnapshot) -> Vec<(usize, usize)> {
    g.adjacency()
        .to_edge_list()
        .into_iter()
        .map(|(u, v, _)| (u, v))
        .collect()
}

struct Batch {
    src: Vec<usize>,
    dst: Vec<usize>,
    labels: Vec<usize>,
}

fn link_batch(
    g: &GraphSnapshot,
    task: &TaskSpec,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Batch>> {
    let mut pos = directed_edges(g);
    if pos.is_empty() {
        return Ok(None);
    }
    if pos.len() > cfg.max_positives {
        let keep = sample(rng, pos.len(), cfg.max_positives);
        pos = keep.iter().map(|i| pos[i]).collect();
    }
    let neg = negative_sample(g, pos.len() * task.negatives_per_positive, rng)?;
    let mut labels = vec![1; pos.len()];
    labels.resize(pos.len() + neg.len(), 0);
    let (src, dst) = pos.into_iter().chain(neg).unzip();
    Ok(Some(Batch { src, dst, labels }))
}

fn edge_label_batch(g: &GraphSnapshot) -> Option<Batch> {
    let labels = g.edge_labels()?;
    if labels.is_empty() {
        return None;
    }
    let mut b = Batch {
        src: Vec::new(),
        dst: Vec::new(),
        labels: Vec::new(),
    };
    for (&(u, v), &c) in labels {
        b.src.push(u);
        b.dst.push(v);
        b.labels.push(c);
    }
    Some(b)
}

fn node_label_batch(g: &GraphSnapshot) -> Option<Batch> {
    let labels = g.node_labels()?;
    Some(Batch {
        src: (0..labels.len()).collect(),
        dst: Vec::new(),
        labels: labels.to_vec(),
    })
}

fn logits(tm: &TaskModel, tape: &mut Tape, emb: Var, b: &Batch) -> Result<Var> {
    let store = &tm.model.store;
    if tm.head.pairwise {
        tm.head
            .pair_logits(tape, store, emb, b.src.clone(), b.dst.clone())
    } else {
        tm.head.node_logits(tape, store, emb, b.src.clone())
    }
}

fn check_labels(b: &Batch, n_classes: usize) -> Result<()> {
    match b.labels.iter().find(|&&c| c >= n_classes) {
        Some(&c) => Err(Error::Index {
            index: c,
            len: n_classes,
        }),
        None => Ok(()),
    }
}

fn balanced_weights(labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                labels.len() as f64 / (present * c as f64)
            }
        })
        .collect()
}

/// One pass over the training timesteps with an Adam step per timestep.
/// Weight evolution is replayed from `t = 0` for every step. Returns the
/// mean loss over timesteps that produced a batch.
pub fn train_epoch(
    graph: &DynamicGraph,
    contexts: &[SnapshotContext],
    tm: &mut TaskModel,
    cfg: &TrainConfig,
    adam: &mut Adam,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let kind = tm.task.kind;
    let mut total = 0.0;
    let mut steps = 0;
    for t in target_range(kind, graph, Phase::Train) {
        let g = graph.snapshot(t);
        let batch = match kind {
            TaskKind::LinkPrediction => link_batch(g, &tm.task, cfg, rng)?,
            TaskKind::EdgeClassification => edge_label_batch(g),
            TaskKind::NodeClassification => node_label_batch(g),
        };
        let Some(batch) = batch else { continue };
        check_labels(&batch, tm.task.output_dim())?;
        let mut tape = Tape::new();
        let emb = tm
            .model
            .embed(&mut tape, contexts, &[embedding_step(kind, t)])?[0];
        let out = logits(tm, &mut tape, emb, &batch)?;
        let weights = cfg
            .balanced_loss
            .then(|| balanced_weights(&batch.labels, tm.task.output_dim()));
        let loss = tape.cross_entropy(out, &batch.labels, weights.as_deref())?;
        total += tape.scalar(loss);
        steps += 1;
        tm.model.store.zero_grad();
        tape.backward(loss, &mut tm.model.store)?;
        adam.step(&mut tm.model.store);
    }
    if steps == 0 {
        return Err(Error::Argument(
            "no training timestep has task labels".into(),
        ));
    }
    Ok(total / steps as f64)
}

fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Metrics on the timesteps of `phase`, without touching parameters.
/// Link-prediction negatives come from `cfg.eval_seed`, so repeated
/// calls agree exactly.
pub fn evaluate(
    graph: &DynamicGraph,
    contexts: &[SnapshotContext],
    tm: &TaskModel,
    cfg: &TrainConfig,
    phase: Phase,
) -> Result<MetricsReport> {
    let kind = tm.task.kind;
    let targets: Vec<usize> = target_range(kind, graph, phase).collect();
    if targets.is_empty() {
        return Err(Error::Undefined(format!("no {phase:?} timesteps")));
    }
    let steps: Vec<usize> = targets.iter().map(|&t| embedding_step(kind, t)).collect();
    let mut tape = Tape::new();
    let embs = tm.model.embed(&mut tape, contexts, &steps)?;
    let mut report = MetricsReport::default();
    match kind {
        TaskKind::LinkPrediction => {
            let (mut mrr_sum, mut map_sum, mut n) = (0.0, 0.0, 0);
            for (&t, &emb) in targets.iter().zip(&embs) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.eval_seed.wrapping_add(t as u64));
                if let Some((m, a)) = rank_links(tm, &mut tape, emb, graph.snapshot(t), &mut rng)? {
                    mrr_sum += m;
                    map_sum += a;
                    n += 1;
                }
            }
            if n == 0 {
                return Err(Error::Undefined("no positive edges to rank".into()));
            }
            report.mrr = Some(mrr_sum / n as f64);
            report.map = Some(map_sum / n as f64);
        }
        _ => {
            let (mut preds, mut labels) = (Vec::new(), Vec::new());
            for (&t, &emb) in targets.iter().zip(&embs) {
                let g = graph.snapshot(t);
                let batch = if kind == TaskKind::EdgeClassification {
                    edge_label_batch(g)
                } else {
                    node_label_batch(g)
                };
                let Some(batch) = batch else { continue };
                check_labels(&batch, tm.task.output_dim())?;
                let out = logits(tm, &mut tape, emb, &batch)?;
                preds.extend(tape.value(out).rows().into_iter().map(argmax));
                labels.extend(batch.labels);
            }
            report.micro_f1 = Some(micro_f1(&preds, &labels, tm.task.output_dim())?);
            report.minority_f1 = Some(minority_f1(&preds, &labels)?);
        }
    }
    Ok(report)
}

/// MRR and MAP for one snapshot's edges, or `None` if no edge can be ranked.
fn rank_links(
    tm: &TaskModel,
    tape: &mut Tape,
    emb: Var,
    g: &GraphSnapshot,
    rng: &mut impl Rng,
) -> Result<Option<(f64, f64)>> {
    let k = tm.task.negatives_per_positive;
    let mut queries = Vec::new();
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    for (u, v) in directed_edges(g) {
        let Some(tails) = corrupt_tails(g, u, k, rng) else {
            continue;
        };
        queries.push(u);
        src.extend(std::iter::repeat_n(u, k + 1));
        dst.push(v);
        dst.extend(tails);
    }
    if queries.is_empty() {
        return Ok(None);
    }
    let out = tm.head.pair_logits(tape, &tm.model.store, emb, src, dst)?;
    let lv = tape.value(out);
    let scores: Vec<f64> = lv.rows().into_iter().map(|r| r[1] - r[0]).collect();

    let mut ranks = Vec::with_capacity(queries.len());
    // per source node: (scores, relevance)
    let mut per_source: std::collections::BTreeMap<usize, (Vec<f64>, Vec<bool>)> =
        Default::default();
    for (q, &u) in queries.iter().enumerate() {
        let block = &scores[q * (k + 1)..(q + 1) * (k + 1)];
        ranks.push(mean_rank(block[0], &block[1..]));
        let entry = per_source.entry(u).or_default();
        entry.0.extend_from_slice(block);
        entry.1.push(true);
        entry.1.extend(std::iter::repeat_n(false, k));
    }
    let mut ap_sum = 0.0;
    for (s, rel) in per_source.values() {
        ap_sum += average_precision_scored(s, rel)?;
    }
    Ok(Some((mrr(&ranks)?, ap_sum / per_source.len() as f64)))
}

/// Result of [`fit`]: the loss curve and periodic validation reports.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub loss_per_epoch: Vec<f64>,
    /// `(epoch, report)` pairs, epochs counted from 1.
    pub validation: Vec<(usize, MetricsReport)>,
}

impl FitOutcome {
    /// First epoch whose validation primary metric reached `threshold`.
    pub fn first_epoch_reaching(&self, threshold: f64) -> Option<usize> {
        self.validation
            .iter()
            .find(|(_, r)| r.primary().is_some_and(|v| v >= threshold))
            .map(|(e, _)| *e)
    }
}

/// Trains for `cfg.epochs` epochs, validating every `cfg.eval_every`.
pub fn fit(
    graph: &DynamicGraph,
    contexts: &[SnapshotContext],
    tm: &mut TaskModel,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<FitOutcome> {
    cfg.validate()?;
    let mut adam = cfg.optimizer();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_val = !target_range(tm.task.kind, graph, Phase::Val).is_empty();
    let mut out = FitOutcome {
        loss_per_epoch: Vec::with_capacity(cfg.epochs),
        validation: Vec::new(),
    };
    for epoch in 1..=cfg.epochs {
        out.loss_per_epoch
            .push(train_epoch(graph, contexts, tm, cfg, &mut adam, &mut rng)?);
        let due = if cfg.eval_every == 0 {
            epoch == cfg.epochs
        } else {
            epoch % cfg.eval_every == 0 || epoch == cfg.epochs
        };
        if has_val && due {
            out.validation
                .push((epoch, evaluate(graph, contexts, tm, cfg, Phase::Val)?));
        }
    }
    Ok(out)
}

/// Builds contexts for `graph` under the model's configuration.
pub fn contexts_for(graph: &DynamicGraph, tm: &TaskModel) -> Result<Vec<SnapshotContext>> {
    prepare_contexts(graph, tm.model.config())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Split;
    use ndarray::Array2;

    /// Two disjoint 5-cliques whose features identify the clique.
    fn cliques(t_count: usize) -> DynamicGraph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        let snaps = (0..t_count)
            .map(|t| {
                let x = Array2::from_shape_fn((10, 2), |(i, j)| f64::from((i / 5 == j) as u8));
                let labels = (0..10).map(|i| i / 5).collect();
                GraphSnapshot::from_edges(10, &edges, x, t)
                    .unwrap()
                    .with_node_labels(labels)
                    .unwrap()
            })
            .collect();
        DynamicGraph::new(
            snaps,
            Split {
                train_end: 3,
                val_end: 4,
                test_end: t_count,
            },
        )
        .unwrap()
    }

    fn small() -> DeftConfig {
        DeftConfig {
            hidden_dim: 32,
            filter_order: 4,
            d_t: 4,
            ..Default::default()
        }
    }

    #[test]
    fn ranges() {
        let g = cliques(5);
        assert_eq!(
            target_range(TaskKind::LinkPrediction, &g, Phase::Train),
            1..3
        );
        assert_eq!(
            target_range(TaskKind::NodeClassification, &g, Phase::Train),
            0..3
        );
        assert_eq!(
            target_range(TaskKind::LinkPrediction, &g, Phase::Test),
            4..5
        );
    }

    #[test]
    fn epoch_loss_positive_and_deterministic_with_frozen_optimizer() {
        let g = cliques(5);
        let run = || {
            let mut tm = TaskModel::new(small(), TaskSpec::default(), 2, 1).unwrap();
            let ctxs = contexts_for(&g, &tm).unwrap();
            let cfg = TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            };
            let mut adam = cfg.optimizer();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let a = train_epoch(&g, &ctxs, &mut tm, &cfg, &mut adam, &mut rng).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let b = train_epoch(&g, &ctxs, &mut tm, &cfg, &mut adam, &mut rng).unwrap();
            (a, b)
        };
        let (a, b) = run();
        assert!(a.is_finite() && a > 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_is_pure_and_task_scoped() {
        let g = cliques(5);
        let tm = TaskModel::new(small(), TaskSpec::default(), 2, 2).unwrap();
        let ctxs = contexts_for(&g, &tm).unwrap();
        let cfg = TrainConfig::default();
        let a = evaluate(&g, &ctxs, &tm, &cfg, Phase::Val).unwrap();
        let b = evaluate(&g, &ctxs, &tm, &cfg, Phase::Val).unwrap();
        assert_eq!(a, b);
        assert!(a.mrr.is_some() && a.map.is_some());
        assert!(a.micro_f1.is_none() && a.minority_f1.is_none());
        for (_, v) in a.populated() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn node_classification_learns_cliques() {
        let g = cliques(5);
        let task = TaskSpec {
            kind: TaskKind::NodeClassification,
            ..Default::default()
        };
        let mut tm = TaskModel::new(small(), task, 2, 3).unwrap();
        let ctxs = contexts_for(&g, &tm).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 0.01,
            eval_every: 0,
            ..Default::default()
        };
        let out = fit(&g, &ctxs, &mut tm, &cfg, 4).unwrap();
        assert!(out.loss_per_epoch[29] < 0.5 * out.loss_per_epoch[0]);
        let r = evaluate(&g, &ctxs, &tm, &cfg, Phase::Test).unwrap();
        assert_eq!(r.micro_f1, Some(1.0));
        assert!(r.map.is_none());
    }

    #[test]
    fn balanced_weights_equalize_class_mass() {
        let w = balanced_weights(&[0, 0, 0, 1], 3);
        assert!((w[0] * 3.0 - w[1]).abs() < 1e-12);
        assert_eq!(w[2], 0.0);
    }

    #[test]
    fn checkpoint_rebuilds_the_model() {
        let g = cliques(5);
        let task = TaskSpec {
            kind: TaskKind::NodeClassification,
            ..Default::default()
        };
        let mut tm = TaskModel::new(small(), task, 2, 3).unwrap();
        let ctxs = contexts_for(&g, &tm).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            ..Default::default()
        };
        fit(&g, &ctxs, &mut tm, &cfg, 0).unwrap();
        let text = tm.checkpoint().to_text();
        let back = TaskModel::from_checkpoint(&Checkpoint::parse(&text).unwrap()).unwrap();
        assert_eq!(back.task, tm.task);
        assert_eq!(back.model.config(), tm.model.config());
        let a = evaluate(&g, &ctxs, &tm, &cfg, Phase::Test).unwrap();
        let b = evaluate(&g, &ctxs, &back, &cfg, Phase::Test).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_tables() {
        let r = MetricsReport {
            mrr: Some(0.5),
            map: Some(0.25),
            loss_per_epoch: vec![1.0, 0.5],
            ..Default::default()
        };
        assert_eq!(
            r.summary_table().to_csv(),
            "metric,value\nmrr,0.5\nmap,0.25\n"
        );
        assert_eq!(r.loss_table().to_csv(), "epoch,loss\n1,1\n2,0.5\n");
    }
}
