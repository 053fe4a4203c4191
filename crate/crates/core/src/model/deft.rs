use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Aggregator, DeftConfig, Pooling, RnnStyle, SpectralMode};
use super::ops::{
    am_forward, constant_rows, fourier_features, gat_forward, message_passing_layer,
    propagation_matrix, timestep_encoding, AttentionHead, GatHead,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_laplacian_with, estimate_lambda_max, DynamicGraph, GraphSnapshot, SparseMatrix,
};
use crate::nn::{
    Activation, ChebyshevOperator, EdgePattern, GruCell, Mlp2, ParamId, ParamStore, Tape, Var,
    LEAKY_SLOPE,
};
use crate::spectral::{all_pass_coefficients, effective_scale, filter_lambda_max, ChebyshevFilter};

/// Everything the model needs from one snapshot, computed once.
#[derive(Debug, Clone)]
pub struct SnapshotContext {
    pub timestep: usize,
    pub features: Array2<f64>,
    pub laplacian: Arc<SparseMatrix>,
    pub lambda_hat: f64,
    /// Set when the power iteration fell back to the degree bound.
    pub lambda_fell_back: bool,
    pub filter_lambda_max: f64,
    /// One operator per configured scale.
    pub operators: Vec<ChebyshevOperator>,
    pub propagation: Arc<SparseMatrix>,
    pub pattern: Arc<EdgePattern>,
}

impl SnapshotContext {
    pub fn new(g: &GraphSnapshot, cfg: &DeftConfig) -> Result<Self> {
        let owned;
        let g = if cfg.binarize {
            owned = g.binarized();
            &owned
        } else {
            g
        };
        let laplacian = Arc::new(build_laplacian_with(g, cfg.laplacian));
        let est = estimate_lambda_max(&laplacian, cfg.lambda_mode)?;
        let lmax = filter_lambda_max(est.value);
        let operators = cfg
            .scales
            .iter()
            .map(|&s| ChebyshevOperator {
                laplacian: laplacian.clone(),
                scale: effective_scale(s, lmax, est.value, cfg.clamp_mode),
                lambda_max: lmax,
            })
            .collect();
        Ok(Self {
            timestep: g.timestep(),
            features: g.features().clone(),
            laplacian,
            lambda_hat: est.value,
            lambda_fell_back: est.fell_back,
            filter_lambda_max: lmax,
            operators,
            propagation: Arc::new(propagation_matrix(g.adjacency())),
            pattern: Arc::new(EdgePattern::with_self_loops(g.adjacency())),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.features.nrows()
    }
}

pub fn prepare_contexts(graph: &DynamicGraph, cfg: &DeftConfig) -> Result<Vec<SnapshotContext>> {
    graph
        .snapshots()
        .iter()
        .map(|g| SnapshotContext::new(g, cfg))
        .collect()
}

/// Initial update-gate bias of the weight-evolution GRUs. With zero gate
/// biases an untrained cell shrinks the weights by roughly 0.7 per step,
/// which erases them over a 20-step sequence.
pub const UPDATE_GATE_BIAS_INIT: f64 = -3.0;

/// A layer weight `W` (`rows×cols`) evolved by a GRU whose hidden vectors are
/// the columns of `W`. The state is kept transposed (`cols×rows`) so the
/// GRU runs on rows.
#[derive(Debug, Clone, Copy)]
struct EvolvingWeight {
    init: ParamId,
    gru: GruCell,
}

impl EvolvingWeight {
    fn register(
        store: &mut ParamStore,
        prefix: &str,
        rows: usize,
        cols: usize,
        style: RnnStyle,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let init = store.glorot(format!("{prefix}.w0"), cols, rows, rng)?;
        let input = (style == RnnStyle::InputDriven).then_some(rows);
        let gru = GruCell::register(store, &format!("{prefix}.gru"), input, rows, rng)?;
        store.value_mut(gru.b[0]).fill(UPDATE_GATE_BIAS_INIT);
        Ok(Self { init, gru })
    }

    /// One evolution step; `layer_input` is required in input-driven mode.
    fn step(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        state: Var,
        layer_input: Option<Var>,
    ) -> Result<Var> {
        let x = match (self.gru.w.is_some(), layer_input) {
            (false, _) => None,
            (true, Some(h)) => {
                let pooled = tape.mean_rows(h)?;
                Some(tape.broadcast_rows(pooled, tape.shape(state).0)?)
            }
            (true, None) => {
                return Err(Error::Argument(
                    "input_driven evolution needs the layer input".into(),
                ))
            }
        };
        self.gru.forward(tape, store, x, state)
    }
}

#[derive(Debug, Clone, Copy)]
struct SpectralHead {
    gnn: EvolvingWeight,
    coeff_mlp: Mlp2,
}

#[derive(Debug, Clone)]
struct Hrm {
    inner: Mlp2,
    w_hr1: ParamId,
    w_hr2: ParamId,
}

#[derive(Debug, Clone)]
enum AggregatorParams {
    Mlp(Mlp2),
    Gat(Vec<[ParamId; 3]>),
    Transformer(Vec<[ParamId; 3]>),
}

/// Evolving weights at the current timestep, as tape variables (transposed).
#[derive(Debug, Clone)]
pub struct EvolvedState {
    spectral: Vec<Var>,
    spatial: Vec<Var>,
    /// Number of evolution steps applied so far.
    pub steps: usize,
}

/// The full model: parameters plus the structure that uses them.
#[derive(Debug, Clone)]
pub struct DeftModel {
    config: DeftConfig,
    d_in: usize,
    pub store: ParamStore,
    spectral_heads: Vec<SpectralHead>,
    spectral_proj: Option<ParamId>,
    spatial_layers: Vec<EvolvingWeight>,
    hrm: Hrm,
    aggregator: AggregatorParams,
}

impl DeftModel {
    pub fn new(config: DeftConfig, d_in: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if d_in == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let hidden = config.hidden_dim;
        let m1 = config.filter_order + 1;

        let mut spectral_heads = Vec::new();
        let mut spectral_proj = None;
        if config.spectral != SpectralMode::Off {
            for h in 0..config.filter_heads {
                let prefix = format!("spectral.{h}");
                let gnn = EvolvingWeight::register(
                    &mut store,
                    &format!("{prefix}.gnn"),
                    d_in,
                    hidden,
                    config.rnn_style,
                    &mut rng,
                )?;
                let coeff_mlp = Mlp2::register(
                    &mut store,
                    &format!("{prefix}.coeff"),
                    (hidden, hidden, m1 * config.coefficient_sets()),
                    false,
                    Activation::LeakyRelu,
                    &mut rng,
                )?;
                // the head starts exactly at the all-pass filter
                store.value_mut(coeff_mlp.w2).fill(0.0);
                spectral_heads.push(SpectralHead { gnn, coeff_mlp });
            }
            let proj_in = config.filter_heads * config.n_scales() * d_in;
            spectral_proj = Some(store.glorot("spectral.proj", proj_in, hidden, &mut rng)?);
        }

        let mut spatial_layers = Vec::new();
        if config.spatial {
            for l in 0..config.n_layers {
                let rows = if l == 0 { d_in } else { hidden };
                spatial_layers.push(EvolvingWeight::register(
                    &mut store,
                    &format!("spatial.{l}"),
                    rows,
                    hidden,
                    config.rnn_style,
                    &mut rng,
                )?);
            }
        }

        let hrm_in = config.d_g() + config.d_l() + config.d_t;
        let hrm = Hrm {
            inner: Mlp2::register(
                &mut store,
                "hrm.mlp",
                (hrm_in, hidden, hrm_in / 2),
                true,
                Activation::LeakyRelu,
                &mut rng,
            )?,
            w_hr1: store.glorot("hrm.w_hr1", hrm_in, hidden, &mut rng)?,
            w_hr2: store.glorot("hrm.w_hr2", hidden, hidden, &mut rng)?,
        };

        let d_out = hidden / config.n_heads;
        let aggregator = match config.aggregator {
            Aggregator::Mlp => AggregatorParams::Mlp(Mlp2::register(
                &mut store,
                "am.mlp",
                (hidden, hidden, hidden),
                true,
                Activation::LeakyRelu,
                &mut rng,
            )?),
            Aggregator::SparseTransformer => {
                let mut heads = Vec::new();
                for h in 0..config.n_heads {
                    let mut ids = [ParamId(0); 3];
                    for (slot, name) in ids.iter_mut().zip(["w_q", "w_k", "w_v"]) {
                        *slot = store.glorot(format!("am.{h}.{name}"), hidden, d_out, &mut rng)?;
                    }
                    heads.push(ids);
                }
                AggregatorParams::Transformer(heads)
            }
            Aggregator::GatStyle => {
                let mut heads = Vec::new();
                for h in 0..config.n_heads {
                    heads.push([
                        store.glorot(format!("gat.{h}.w"), hidden, d_out, &mut rng)?,
                        store.glorot(format!("gat.{h}.a_src"), d_out, 1, &mut rng)?,
                        store.glorot(format!("gat.{h}.a_dst"), d_out, 1, &mut rng)?,
                    ]);
                }
                AggregatorParams::Gat(heads)
            }
        };

        Ok(Self {
            config,
            d_in,
            store,
            spectral_heads,
            spectral_proj,
            spatial_layers,
            hrm,
            aggregator,
        })
    }

    pub fn config(&self) -> &DeftConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.d_in
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// State before the first evolution step.
    pub fn initial_state(&self, tape: &mut Tape) -> EvolvedState {
        EvolvedState {
            spectral: self
                .spectral_heads
                .iter()
                .map(|h| tape.param(&self.store, h.gnn.init))
                .collect(),
            spatial: self
                .spatial_layers
                .iter()
                .map(|l| tape.param(&self.store, l.init))
                .collect(),
            steps: 0,
        }
    }

    /// Current layer weights `W` (untransposed) for inspection.
    pub fn state_weights(&self, tape: &Tape, state: &EvolvedState) -> Vec<Array2<f64>> {
        state
            .spectral
            .iter()
            .chain(&state.spatial)
            .map(|&v| tape.value(v).t().to_owned())
            .collect()
    }

    /// Evolves every layer weight once using snapshot `ctx`. Returns the
    /// spatial-layer outputs when they were computed along the way.
    pub fn evolve(
        &self,
        tape: &mut Tape,
        state: &EvolvedState,
        ctx: &SnapshotContext,
        x: Var,
    ) -> Result<EvolvedState> {
        let driven = self.config.rnn_style == RnnStyle::InputDriven;
        let input = driven.then_some(x);
        let mut spectral = Vec::with_capacity(state.spectral.len());
        for (h, &w) in self.spectral_heads.iter().zip(&state.spectral) {
            spectral.push(h.gnn.step(tape, &self.store, w, input)?);
        }
        let mut spatial = Vec::with_capacity(state.spatial.len());
        let mut layer_in = x;
        for (l, &w) in self.spatial_layers.iter().zip(&state.spatial) {
            let next = l.step(tape, &self.store, w, driven.then_some(layer_in))?;
            if driven && spatial.len() + 1 < self.spatial_layers.len() {
                let wt = tape.transpose(next)?;
                layer_in = message_passing_layer(tape, &ctx.propagation, layer_in, wt)?;
            }
            spatial.push(next);
        }
        Ok(EvolvedState {
            spectral,
            spatial,
            steps: state.steps + 1,
        })
    }

    /// Filter coefficients of every spectral head at this state, each a
    /// `1×(sets·(M+1))` row including the all-pass offset.
    pub fn coefficients(
        &self,
        tape: &mut Tape,
        state: &EvolvedState,
        ctx: &SnapshotContext,
        x: Var,
    ) -> Result<Vec<Var>> {
        let sets = self.config.coefficient_sets();
        let mut offset = Vec::with_capacity(sets * (self.config.filter_order + 1));
        for _ in 0..sets {
            offset.extend(all_pass_coefficients(self.config.filter_order));
        }
        let offset = Array2::from_shape_vec((1, offset.len()), offset).expect("row");
        let mut out = Vec::with_capacity(self.spectral_heads.len());
        for (head, &w) in self.spectral_heads.iter().zip(&state.spectral) {
            let wt = tape.transpose(w)?;
            let h = message_passing_layer(tape, &ctx.propagation, x, wt)?;
            let pooled = match self.config.pooling {
                Pooling::Mean => tape.mean_rows(h)?,
                Pooling::Sum => {
                    let n = tape.shape(h).0 as f64;
                    let m = tape.mean_rows(h)?;
                    tape.scale(m, n)?
                }
            };
            let delta = head.coeff_mlp.forward(tape, &self.store, pooled)?;
            let base = tape.constant(offset.clone())?;
            out.push(tape.add(delta, base)?);
        }
        Ok(out)
    }

    /// `concat_{head, j} g_head(s_j L) X · proj`.
    pub fn spectral_features(
        &self,
        tape: &mut Tape,
        coeffs: &[Var],
        ctx: &SnapshotContext,
        x: Var,
    ) -> Result<Var> {
        let m1 = self.config.filter_order + 1;
        let mut parts = Vec::new();
        for &c in coeffs {
            for (j, op) in ctx.operators.iter().enumerate() {
                let cj = if self.config.per_scale_coefficients {
                    tape.slice_cols(c, j * m1, m1)?
                } else {
                    c
                };
                parts.push(tape.chebyshev(op.clone(), cj, x)?);
            }
        }
        let filtered = tape.concat_cols(&parts)?;
        let proj = tape.param(&self.store, self.spectral_proj.expect("spectral enabled"));
        tape.matmul(filtered, proj)
    }

    fn spatial_features(
        &self,
        tape: &mut Tape,
        state: &EvolvedState,
        ctx: &SnapshotContext,
        x: Var,
    ) -> Result<Var> {
        let mut h = x;
        for &w in &state.spatial {
            let wt = tape.transpose(w)?;
            h = message_passing_layer(tape, &ctx.propagation, h, wt)?;
        }
        Ok(h)
    }

    /// `W_hr2 σ(W_hr1 (sin ‖ cos)(MLP(v_g ‖ v_l ‖ t)))`, row-wise.
    pub fn hrm_forward(&self, tape: &mut Tape, parts: &[Var], t_enc: Var) -> Result<Var> {
        let mut all = parts.to_vec();
        all.push(t_enc);
        let cat = tape.concat_cols(&all)?;
        let v_gl = self.hrm.inner.forward(tape, &self.store, cat)?;
        let v_ff = fourier_features(tape, v_gl)?;
        let w1 = tape.param(&self.store, self.hrm.w_hr1);
        let w2 = tape.param(&self.store, self.hrm.w_hr2);
        let h = tape.matmul(v_ff, w1)?;
        let h = tape.leaky_relu(h, LEAKY_SLOPE)?;
        tape.matmul(h, w2)
    }

    fn aggregate(&self, tape: &mut Tape, ctx: &SnapshotContext, x: Var) -> Result<Var> {
        match &self.aggregator {
            AggregatorParams::Mlp(mlp) => mlp.forward(tape, &self.store, x),
            AggregatorParams::Transformer(heads) => {
                let heads: Vec<AttentionHead> = heads
                    .iter()
                    .map(|ids| AttentionHead {
                        q: tape.param(&self.store, ids[0]),
                        k: tape.param(&self.store, ids[1]),
                        v: tape.param(&self.store, ids[2]),
                    })
                    .collect();
                am_forward(tape, &ctx.pattern, x, &heads)
            }
            AggregatorParams::Gat(heads) => {
                let heads: Vec<GatHead> = heads
                    .iter()
                    .map(|ids| GatHead {
                        w: tape.param(&self.store, ids[0]),
                        a_src: tape.param(&self.store, ids[1]),
                        a_dst: tape.param(&self.store, ids[2]),
                    })
                    .collect();
                gat_forward(tape, &ctx.pattern, x, &heads)
            }
        }
    }

    /// Node embeddings for one snapshot given already-evolved weights.
    /// `static_coeffs` replaces the per-snapshot coefficients when set.
    pub fn forward_snapshot(
        &self,
        tape: &mut Tape,
        state: &EvolvedState,
        ctx: &SnapshotContext,
        static_coeffs: Option<&[Var]>,
    ) -> Result<Var> {
        self.check_features(ctx)?;
        let n = ctx.n_nodes();
        let x = tape.constant(ctx.features.clone())?;
        let mut parts = Vec::new();
        if self.config.spectral != SpectralMode::Off {
            let coeffs = match static_coeffs {
                Some(c) => c.to_vec(),
                None => self.coefficients(tape, state, ctx, x)?,
            };
            parts.push(self.spectral_features(tape, &coeffs, ctx, x)?);
        }
        if self.config.spatial {
            parts.push(self.spatial_features(tape, state, ctx, x)?);
        }
        let t_enc = timestep_encoding(ctx.timestep, self.config.d_t)?;
        let t_enc = constant_rows(tape, &t_enc, n)?;
        let h = self.hrm_forward(tape, &parts, t_enc)?;
        self.aggregate(tape, ctx, h)
    }

    fn check_features(&self, ctx: &SnapshotContext) -> Result<()> {
        if ctx.features.ncols() != self.d_in {
            return Err(Error::shape(
                "deft_forward",
                format!(
                    "model expects {} features, snapshot has {}",
                    self.d_in,
                    ctx.features.ncols()
                ),
            ));
        }
        Ok(())
    }

    /// Embeddings at each timestep in `targets` (ascending). Weights evolve
    /// once per timestep starting from `t = 0`; full forward passes run
    /// only at the requested timesteps.
    pub fn embed(
        &self,
        tape: &mut Tape,
        contexts: &[SnapshotContext],
        targets: &[usize],
    ) -> Result<Vec<Var>> {
        let Some(&last) = targets.last() else {
            return Err(Error::Argument("empty timestep range".into()));
        };
        if last >= contexts.len() {
            return Err(Error::Index {
                index: last,
                len: contexts.len(),
            });
        }
        if targets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(
                "timesteps must be strictly increasing".into(),
            ));
        }
        let mut state = self.initial_state(tape);
        let mut static_coeffs = None;
        let mut out = Vec::with_capacity(targets.len());
        let mut next = 0;
        for (t, ctx) in contexts.iter().enumerate().take(last + 1) {
            self.check_features(ctx)?;
            let x = tape.constant(ctx.features.clone())?;
            state = self.evolve(tape, &state, ctx, x)?;
            if t == 0 && self.config.spectral == SpectralMode::Static {
                static_coeffs = Some(self.coefficients(tape, &state, ctx, x)?);
            }
            if targets[next] == t {
                out.push(self.forward_snapshot(tape, &state, ctx, static_coeffs.as_deref())?);
                next += 1;
            }
        }
        Ok(out)
    }

    /// Embedding values for every timestep in `range`, without keeping the tape.
    pub fn embed_sequence(
        &self,
        contexts: &[SnapshotContext],
        range: std::ops::Range<usize>,
    ) -> Result<Vec<Array2<f64>>> {
        let targets: Vec<usize> = range.collect();
        let mut tape = Tape::new();
        let vars = self.embed(&mut tape, contexts, &targets)?;
        Ok(vars.iter().map(|&v| tape.value(v).clone()).collect())
    }

    /// Learned filters at timestep `t`: one entry per head, each holding one
    /// filter per coefficient set.
    pub fn filters_at(
        &self,
        contexts: &[SnapshotContext],
        t: usize,
    ) -> Result<Vec<Vec<ChebyshevFilter>>> {
        if self.config.spectral == SpectralMode::Off {
            return Err(Error::Config("model has no spectral module".into()));
        }
        if t >= contexts.len() {
            return Err(Error::Index {
                index: t,
                len: contexts.len(),
            });
        }
        let mut tape = Tape::new();
        let mut state = self.initial_state(&mut tape);
        let mut coeffs = None;
        for (tau, ctx) in contexts.iter().enumerate().take(t + 1) {
            let x = tape.constant(ctx.features.clone())?;
            state = self.evolve(&mut tape, &state, ctx, x)?;
            let frozen = self.config.spectral == SpectralMode::Static && tau > 0;
            if !frozen {
                coeffs = Some(self.coefficients(&mut tape, &state, ctx, x)?);
            }
        }
        let m1 = self.config.filter_order + 1;
        let lmax = contexts[t].filter_lambda_max;
        coeffs
            .expect("at least one step")
            .iter()
            .map(|&c| {
                tape.value(c)
                    .as_slice()
                    .expect("row")
                    .chunks(m1)
                    .map(|chunk| ChebyshevFilter::new(chunk.to_vec(), lmax))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Split;
    use crate::spectral::{apply_filter_bounded, ClampMode};
    use rand::Rng;

    fn snapshot(
        n: usize,
        edges: &[(usize, usize)],
        d: usize,
        t: usize,
        seed: u64,
    ) -> GraphSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let x = Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0..1.0));
        GraphSnapshot::from_edges(n, &w, x, t).unwrap()
    }

    fn small_cfg() -> DeftConfig {
        DeftConfig {
            hidden_dim: 32,
            filter_order: 4,
            scales: vec![0.5, 1.0],
            ..Default::default()
        }
    }

    fn two_step_graph(seed: u64) -> DynamicGraph {
        let a = snapshot(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)], 3, 0, seed);
        let b = snapshot(6, &[(0, 2), (1, 2), (3, 5), (4, 5), (0, 5)], 3, 1, seed + 1);
        DynamicGraph::new(
            vec![a, b],
            Split {
                train_end: 1,
                val_end: 2,
                test_end: 2,
            },
        )
        .unwrap()
    }

    #[test]
    fn initial_filter_is_all_pass() {
        let g = two_step_graph(1);
        let cfg = small_cfg();
        let model = DeftModel::new(cfg.clone(), 3, 7).unwrap();
        let ctxs = prepare_contexts(&g, &cfg).unwrap();
        let filters = model.filters_at(&ctxs, 1).unwrap();
        assert_eq!(filters.len(), 1);
        assert_eq!(filters[0][0].coefficients(), &[2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn spectral_features_identity_projection() {
        let g = two_step_graph(2);
        let cfg = DeftConfig {
            scales: vec![1.0],
            ..small_cfg()
        };
        let mut model = DeftModel::new(cfg.clone(), 3, 3).unwrap();
        let ctxs = prepare_contexts(&g, &cfg).unwrap();
        // proj is (J·d_in)×hidden; use a padded identity so Z = [X, 0]
        let proj = model.store.get("spectral.proj").unwrap();
        let mut eye = Array2::zeros((3, 32));
        for i in 0..3 {
            eye[[i, i]] = 1.0;
        }
        model.store.set(proj, eye).unwrap();
        let mut tape = Tape::new();
        let state = model.initial_state(&mut tape);
        let x = tape.constant(ctxs[0].features.clone()).unwrap();
        let c = model.coefficients(&mut tape, &state, &ctxs[0], x).unwrap();
        let z = model.spectral_features(&mut tape, &c, &ctxs[0], x).unwrap();
        let z = tape.value(z);
        let diff = &z.slice(ndarray::s![.., 0..3]) - &ctxs[0].features;
        assert!(diff.iter().all(|d| d.abs() < 1e-12));
        assert!(z.slice(ndarray::s![.., 3..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_shapes_across_search_space() {
        let g = two_step_graph(3);
        for agg in [
            Aggregator::Mlp,
            Aggregator::GatStyle,
            Aggregator::SparseTransformer,
        ] {
            for (layers, hidden, heads, m) in [(1, 32, 4, 4), (2, 64, 8, 8), (2, 128, 16, 16)] {
                let cfg = DeftConfig {
                    n_layers: layers,
                    hidden_dim: hidden,
                    n_heads: heads,
                    filter_order: m,
                    aggregator: agg,
                    ..Default::default()
                };
                let model = DeftModel::new(cfg.clone(), 3, 1).unwrap();
                let ctxs = prepare_contexts(&g, &cfg).unwrap();
                let emb = model.embed_sequence(&ctxs, 0..2).unwrap();
                assert!(emb.iter().all(|e| e.dim() == (6, hidden)));
                let f = model.filters_at(&ctxs, 0).unwrap();
                assert_eq!(f[0][0].coefficients().len(), m + 1);
            }
        }
    }

    #[test]
    fn deterministic_embeddings() {
        let g = two_step_graph(4);
        let cfg = small_cfg();
        let ctxs = prepare_contexts(&g, &cfg).unwrap();
        let a = DeftModel::new(cfg.clone(), 3, 11)
            .unwrap()
            .embed_sequence(&ctxs, 0..2)
            .unwrap();
        let b = DeftModel::new(cfg, 3, 11)
            .unwrap()
            .embed_sequence(&ctxs, 0..2)
            .unwrap();
        assert_eq!(a, b);
    }

    fn zero_gru(model: &mut DeftModel) {
        for id in model.store.ids().collect::<Vec<_>>() {
            if model.store.name(id).contains(".gru.") {
                model.store.value_mut(id).fill(0.0);
            }
        }
    }

    #[test]
    fn zero_gru_halves_weights_each_step() {
        let g = two_step_graph(5);
        let cfg = small_cfg();
        let mut model = DeftModel::new(cfg.clone(), 3, 2).unwrap();
        zero_gru(&mut model);
        let ctxs = prepare_contexts(&g, &cfg).unwrap();
        let mut tape = Tape::new();
        let s0 = model.initial_state(&mut tape);
        let x = tape.constant(ctxs[0].features.clone()).unwrap();
        let s1 = model.evolve(&mut tape, &s0, &ctxs[0], x).unwrap();
        let s2 = model.evolve(&mut tape, &s1, &ctxs[1], x).unwrap();
        let w1 = model.state_weights(&tape, &s1);
        let w2 = model.state_weights(&tape, &s2);
        for (a, b) in w1.iter().zip(&w2) {
            assert_eq!(&(a * 0.5), b);
        }
        let w0 = model.state_weights(&tape, &s0);
        assert_eq!(&(&w0[0] * 0.25), &w2[0]);
    }

    #[test]
    fn evolution_gradient_reaches_gru_through_three_steps() {
        let a = snapshot(5, &[(0, 1), (1, 2), (3, 4)], 3, 0, 1);
        let snaps: Vec<_> = (0..3)
            .map(|t| {
                let mut s = a.clone();
                s = GraphSnapshot::new(s.adjacency().clone(), s.features().clone(), t).unwrap();
                s
            })
            .collect();
        let g = DynamicGraph::new(snaps, Split::proportional(3)).unwrap();
        let cfg = small_cfg();
        let mut model = DeftModel::new(cfg.clone(), 3, 5).unwrap();
        let ctxs = prepare_contexts(&g, &cfg).unwrap();
        let mut tape = Tape::new();
        let emb = model.embed(&mut tape, &ctxs, &[2]).unwrap()[0];
        let loss = tape.sum(emb).unwrap();
        let mut store = model.store.clone();
        tape.backward(loss, &mut store).unwrap();
        model.store = store;
        let gru_norm: f64 = model
            .store
            .ids()
            .filter(|&id| model.store.name(id).starts_with("spatial.0.gru"))
            .map(|id| model.store.grad(id).iter().map(|g| g * g).sum::<f64>())
            .sum();
        assert!(gru_norm > 0.0);
    }

    #[test]
    fn spectral_features_match_apply_filter() {
        let g = two_step_graph(6);
        let cfg = small_cfg();
        let model = DeftModel::new(cfg.clone(), 3, 4).unwrap();
        let ctxs = prepare_contexts(&g, &cfg).unwrap();
        let mut tape = Tape::new();
        let c = tape
            .constant(ndarray::array![[1.0, -0.5, 0.3, 0.2, -0.1]])
            .unwrap();
        let x = tape.constant(ctxs[1].features.clone()).unwrap();
        let y = tape.chebyshev(ctxs[1].operators[1].clone(), c, x).unwrap();
        let f = ChebyshevFilter::new(vec![1.0, -0.5, 0.3, 0.2, -0.1], ctxs[1].filter_lambda_max)
            .unwrap();
        let want = apply_filter_bounded(
            &f,
            1.0,
            &ctxs[1].laplacian,
            ctxs[1].lambda_hat,
            ctxs[1].features.view(),
            ClampMode::Clamp,
        )
        .unwrap();
        assert!((tape.value(y) - &want).iter().all(|d| d.abs() < 1e-12));
        drop(model);
    }
}
