//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! Every op records its inputs on a [`Tape`]; `backward` walks the record in
//! exact reverse and accumulates parameter gradients into a [`ParamStore`].
//! Sparse graph operators enter as fused ops so the graph structure is never
//! densified.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{s, Array2, Axis, Zip};

use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::spectral::{chebyshev_terms, combine_terms};

/// Handle to a value recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Row-compressed sparsity pattern (self-loops included) for attention.
/// Edge `e` of row `i` connects `i` to `cols[e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePattern {
    n: usize,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    rows: Vec<usize>,
}

impl EdgePattern {
    /// Pattern of `A + I`.
    pub fn with_self_loops(adjacency: &SparseMatrix) -> Self {
        let n = adjacency.n_rows();
        let mut row_offsets = vec![0];
        let mut cols = Vec::with_capacity(adjacency.nnz() + n);
        let mut rows = Vec::with_capacity(adjacency.nnz() + n);
        for i in 0..n {
            let (c, _) = adjacency.row(i);
            let mut inserted = false;
            for &j in c {
                if !inserted && j >= i {
                    if j != i {
                        cols.push(i);
                        rows.push(i);
                    }
                    inserted = true;
                }
                cols.push(j);
                rows.push(i);
            }
            if !inserted {
                cols.push(i);
                rows.push(i);
            }
            row_offsets.push(cols.len());
        }
        Self {
            n,
            row_offsets,
            cols,
            rows,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.cols.len()
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_offsets[i]..self.row_offsets[i + 1]
    }

    pub fn col(&self, e: usize) -> usize {
        self.cols[e]
    }

    pub fn row_of(&self, e: usize) -> usize {
        self.rows[e]
    }
}

/// A fixed scaled-Laplacian operator for the fused Chebyshev op.
#[derive(Debug, Clone)]
pub struct ChebyshevOperator {
    pub laplacian: Arc<SparseMatrix>,
    pub scale: f64,
    pub lambda_max: f64,
}

enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Affine(Var, f64),
    LeakyRelu(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Sin(Var),
    Cos(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    Transpose(Var),
    MeanRows(Var),
    BroadcastRows(Var),
    Sum(Var),
    SpMM(Arc<SparseMatrix>, Var),
    GatherRows(Var, Arc<Vec<usize>>),
    Chebyshev {
        op: ChebyshevOperator,
        coeffs: Var,
        x: Var,
        terms: Vec<Array2<f64>>,
    },
    EdgeDot(Var, Var, Arc<EdgePattern>, f64),
    EdgePairSum(Var, Var, Arc<EdgePattern>),
    SparseSoftmax(Var, Arc<EdgePattern>),
    SparseAggregate(Var, Var, Arc<EdgePattern>),
    MaskedSoftmax(Var),
    CrossEntropy {
        logits: Var,
        probs: Array2<f64>,
        targets: Vec<usize>,
        weights: Vec<f64>,
    },
}

struct Node {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

/// One computation record. Not shared across threads.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

fn finite(op: &'static str, a: &Array2<f64>) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

fn same_shape(op: &'static str, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::shape(op, format!("{:?} vs {:?}", a.dim(), b.dim())))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// First entry of a value, for `1×1` losses.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    fn push(
        &mut self,
        op: &'static str,
        value: Array2<f64>,
        kind: Op,
        inputs: &[Var],
    ) -> Result<Var> {
        finite(op, &value)?;
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            value,
            op: kind,
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Result<Var> {
        finite("constant", &value)?;
        self.nodes.push(Node {
            value,
            op: Op::Constant,
            needs_grad: false,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Leaf for a trainable parameter; repeated calls share one node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: store.value(id).clone(),
            op: Op::Param(id),
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ncols() != bv.nrows() {
            return Err(Error::shape(
                "matmul",
                format!("{:?} · {:?}", av.dim(), bv.dim()),
            ));
        }
        let out = av.dot(bv);
        self.push("matmul", out, Op::MatMul(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let out = self.value(a) + self.value(b);
        self.push("add", out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("sub", self.value(a), self.value(b))?;
        let out = self.value(a) - self.value(b);
        self.push("sub", out, Op::Sub(a, b), &[a, b])
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let out = self.value(a) * self.value(b);
        self.push("mul", out, Op::Mul(a, b), &[a, b])
    }

    /// `a + 1·b` with `b` a `1×n` row added to every row.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if bv.nrows() != 1 || bv.ncols() != av.ncols() {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + row {:?}", av.dim(), bv.dim()),
            ));
        }
        let out = av + bv;
        self.push("add_row", out, Op::AddRow(a, b), &[a, b])
    }

    /// `c·a + d`.
    pub fn affine(&mut self, a: Var, c: f64, d: f64) -> Result<Var> {
        let out = self.value(a).mapv(|x| c * x + d);
        self.push("affine", out, Op::Affine(a, c), &[a])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.affine(a, c, 0.0)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        let out = self.value(a).mapv(|x| if x > 0.0 { x } else { slope * x });
        self.push("leaky_relu", out, Op::LeakyRelu(a, slope), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).mapv(f64::tanh);
        self.push("tanh", out, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).mapv(sigmoid);
        self.push("sigmoid", out, Op::Sigmoid(a), &[a])
    }

    pub fn sin(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).mapv(f64::sin);
        self.push("sin", out, Op::Sin(a), &[a])
    }

    pub fn cos(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).mapv(f64::cos);
        self.push("cos", out, Op::Cos(a), &[a])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("concat_cols", "no inputs"))?;
        let rows = self.value(*first).nrows();
        if let Some(p) = parts.iter().find(|p| self.value(**p).nrows() != rows) {
            return Err(Error::shape(
                "concat_cols",
                format!("{rows} rows vs {:?}", self.value(*p).dim()),
            ));
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let out = ndarray::concatenate(Axis(1), &views).expect("row counts checked");
        self.push("concat_cols", out, Op::ConcatCols(parts.to_vec()), parts)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let av = self.value(a);
        if start + len > av.ncols() {
            return Err(Error::shape(
                "slice_cols",
                format!("cols {start}..{} of {:?}", start + len, av.dim()),
            ));
        }
        let out = av.slice(s![.., start..start + len]).to_owned();
        self.push("slice_cols", out, Op::SliceCols(a, start), &[a])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).t().to_owned();
        self.push("transpose", out, Op::Transpose(a), &[a])
    }

    /// Column means, `1×d`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.nrows() == 0 {
            return Err(Error::shape("mean_rows", "no rows"));
        }
        let out = av
            .mean_axis(Axis(0))
            .expect("rows > 0")
            .insert_axis(Axis(0));
        self.push("mean_rows", out, Op::MeanRows(a), &[a])
    }

    /// Repeats a `1×d` row `n` times.
    pub fn broadcast_rows(&mut self, a: Var, n: usize) -> Result<Var> {
        let av = self.value(a);
        if av.nrows() != 1 {
            return Err(Error::shape(
                "broadcast_rows",
                format!("{:?} is not a row", av.dim()),
            ));
        }
        let out = av
            .broadcast((n, av.ncols()))
            .expect("row broadcast")
            .to_owned();
        self.push("broadcast_rows", out, Op::BroadcastRows(a), &[a])
    }

    /// Sum of all entries, `1×1`.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Array2::from_elem((1, 1), self.value(a).sum());
        self.push("sum", out, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n)
    }

    /// Sparse-dense product `M·X`.
    pub fn spmm(&mut self, m: Arc<SparseMatrix>, x: Var) -> Result<Var> {
        let out = m.mul_dense(self.value(x).view())?;
        self.push("spmm", out, Op::SpMM(m, x), &[x])
    }

    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let av = self.value(a);
        if let Some(&i) = idx.iter().find(|&&i| i >= av.nrows()) {
            return Err(Error::Index {
                index: i,
                len: av.nrows(),
            });
        }
        let out = av.select(Axis(0), &idx);
        self.push("gather_rows", out, Op::GatherRows(a, idx), &[a])
    }

    /// `Σ' c_k T_k(L̃)X` with `coeffs` a `1×(M+1)` row and a symmetric `L`.
    pub fn chebyshev(&mut self, op: ChebyshevOperator, coeffs: Var, x: Var) -> Result<Var> {
        let c = self.value(coeffs);
        if c.nrows() != 1 || c.ncols() == 0 {
            return Err(Error::shape(
                "chebyshev",
                format!("coefficients {:?}", c.dim()),
            ));
        }
        let order = c.ncols() - 1;
        let terms = chebyshev_terms(
            &op.laplacian,
            op.scale,
            op.lambda_max,
            self.value(x).view(),
            order,
        )?;
        let coeff_vec: Vec<f64> = c.iter().copied().collect();
        let out = combine_terms(&coeff_vec, &terms);
        self.push(
            "chebyshev",
            out,
            Op::Chebyshev {
                op,
                coeffs,
                x,
                terms,
            },
            &[coeffs, x],
        )
    }

    /// Per-edge score `scale·⟨q_i, k_j⟩`, an `E×1` column.
    pub fn edge_dot(
        &mut self,
        q: Var,
        k: Var,
        pattern: Arc<EdgePattern>,
        scale: f64,
    ) -> Result<Var> {
        let (qv, kv) = (self.value(q), self.value(k));
        if qv.dim() != kv.dim() || qv.nrows() != pattern.n {
            return Err(Error::shape(
                "edge_dot",
                format!("q {:?}, k {:?}, {} nodes", qv.dim(), kv.dim(), pattern.n),
            ));
        }
        let out = Array2::from_shape_fn((pattern.n_edges(), 1), |(e, _)| {
            let (i, j) = (pattern.rows[e], pattern.cols[e]);
            scale * qv.row(i).dot(&kv.row(j))
        });
        self.push("edge_dot", out, Op::EdgeDot(q, k, pattern, scale), &[q, k])
    }

    /// Per-edge score `a_i + b_j` from two `N×1` columns.
    pub fn edge_pair_sum(&mut self, a: Var, b: Var, pattern: Arc<EdgePattern>) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.dim() != (pattern.n, 1) || bv.dim() != (pattern.n, 1) {
            return Err(Error::shape(
                "edge_pair_sum",
                format!("{:?} and {:?} for {} nodes", av.dim(), bv.dim(), pattern.n),
            ));
        }
        let out = Array2::from_shape_fn((pattern.n_edges(), 1), |(e, _)| {
            av[[pattern.rows[e], 0]] + bv[[pattern.cols[e], 0]]
        });
        self.push(
            "edge_pair_sum",
            out,
            Op::EdgePairSum(a, b, pattern),
            &[a, b],
        )
    }

    /// Softmax of edge scores within each row of the pattern.
    pub fn sparse_softmax(&mut self, scores: Var, pattern: Arc<EdgePattern>) -> Result<Var> {
        let sv = self.value(scores);
        if sv.dim() != (pattern.n_edges(), 1) {
            return Err(Error::shape(
                "sparse_softmax",
                format!("{:?} for {} edges", sv.dim(), pattern.n_edges()),
            ));
        }
        let mut out = Array2::zeros((pattern.n_edges(), 1));
        for i in 0..pattern.n {
            let r = pattern.row_range(i);
            if r.is_empty() {
                continue;
            }
            let m = r
                .clone()
                .map(|e| sv[[e, 0]])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for e in r.clone() {
                let v = (sv[[e, 0]] - m).exp();
                out[[e, 0]] = v;
                z += v;
            }
            for e in r {
                out[[e, 0]] /= z;
            }
        }
        self.push(
            "sparse_softmax",
            out,
            Op::SparseSoftmax(scores, pattern),
            &[scores],
        )
    }

    /// `out_i = Σ_{e=(i,j)} w_e · v_j`.
    pub fn sparse_aggregate(&mut self, w: Var, v: Var, pattern: Arc<EdgePattern>) -> Result<Var> {
        let (wv, vv) = (self.value(w), self.value(v));
        if wv.dim() != (pattern.n_edges(), 1) || vv.nrows() != pattern.n {
            return Err(Error::shape(
                "sparse_aggregate",
                format!("weights {:?}, values {:?}", wv.dim(), vv.dim()),
            ));
        }
        let mut out = Array2::zeros((pattern.n, vv.ncols()));
        for i in 0..pattern.n {
            let mut row = out.row_mut(i);
            for e in pattern.row_range(i) {
                row.scaled_add(wv[[e, 0]], &vv.row(pattern.cols[e]));
            }
        }
        self.push(
            "sparse_aggregate",
            out,
            Op::SparseAggregate(w, v, pattern),
            &[w, v],
        )
    }

    /// Row softmax over entries where `mask` is true; fully masked rows are zero.
    pub fn masked_softmax(&mut self, scores: Var, mask: Arc<Array2<bool>>) -> Result<Var> {
        let sv = self.value(scores);
        if sv.dim() != mask.dim() {
            return Err(Error::shape(
                "masked_softmax",
                format!("scores {:?}, mask {:?}", sv.dim(), mask.dim()),
            ));
        }
        let mut out = Array2::zeros(sv.raw_dim());
        for ((srow, mrow), mut orow) in sv.rows().into_iter().zip(mask.rows()).zip(out.rows_mut()) {
            let m = srow
                .iter()
                .zip(mrow)
                .filter(|(_, &keep)| keep)
                .map(|(s, _)| *s)
                .fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                continue;
            }
            let mut z = 0.0;
            for ((o, s), &keep) in orow.iter_mut().zip(srow).zip(mrow) {
                if keep {
                    *o = (s - m).exp();
                    z += *o;
                }
            }
            orow.mapv_inplace(|o| o / z);
        }
        self.push("masked_softmax", out, Op::MaskedSoftmax(scores), &[scores])
    }

    /// Weighted mean negative log-likelihood of `targets` under row softmax.
    /// `class_weights` defaults to uniform.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        class_weights: Option<&[f64]>,
    ) -> Result<Var> {
        let lv = self.value(logits);
        let (b, c) = lv.dim();
        if targets.len() != b || b == 0 {
            return Err(Error::shape(
                "cross_entropy",
                format!("{b} rows for {} targets", targets.len()),
            ));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= c) {
            return Err(Error::Index { index: t, len: c });
        }
        if let Some(w) = class_weights {
            if w.len() != c {
                return Err(Error::shape(
                    "cross_entropy",
                    format!("{} weights for {c} classes", w.len()),
                ));
            }
        }
        let weights: Vec<f64> = targets
            .iter()
            .map(|&t| class_weights.map_or(1.0, |w| w[t]))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Argument("class weights sum to zero".into()));
        }
        let mut probs = Array2::zeros((b, c));
        let mut loss = 0.0;
        for (r, (row, &t)) in lv.rows().into_iter().zip(targets).enumerate() {
            let m = row.fold(f64::NEG_INFINITY, |a, &x| a.max(x));
            let z: f64 = row.iter().map(|x| (x - m).exp()).sum();
            for (k, x) in row.iter().enumerate() {
                probs[[r, k]] = (x - m).exp() / z;
            }
            loss += weights[r] * (z.ln() + m - row[t]);
        }
        let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let out = Array2::from_elem((1, 1), loss / total);
        self.push(
            "cross_entropy",
            out,
            Op::CrossEntropy {
                logits,
                probs,
                targets: targets.to_vec(),
                weights: norm,
            },
            &[logits],
        )
    }

    /// Back-propagates from `loss` (seeded with ones) and adds parameter
    /// gradients into `store`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<()> {
        let mut grads: Vec<Option<Array2<f64>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones(self.value(loss).raw_dim()));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let mut send = |v: Var, d: Array2<f64>| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => *acc += &d,
                    slot => *slot = Some(d),
                }
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    *store.grad_mut(*id) += &g;
                }
                Op::MatMul(a, b) => {
                    send(*a, g.dot(&self.value(*b).t()));
                    send(*b, self.value(*a).t().dot(&g));
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*b, -&g);
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    send(*a, &g * self.value(*b));
                    send(*b, &g * self.value(*a));
                }
                Op::AddRow(a, b) => {
                    send(*b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    send(*a, g);
                }
                Op::Affine(a, c) => send(*a, g * *c),
                Op::LeakyRelu(a, slope) => {
                    let mut d = g;
                    Zip::from(&mut d).and(self.value(*a)).for_each(|d, &x| {
                        if x <= 0.0 {
                            *d *= slope
                        }
                    });
                    send(*a, d);
                }
                Op::Tanh(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&node.value)
                        .for_each(|d, &y| *d *= 1.0 - y * y);
                    send(*a, d);
                }
                Op::Sigmoid(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&node.value)
                        .for_each(|d, &y| *d *= y * (1.0 - y));
                    send(*a, d);
                }
                Op::Sin(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(*a))
                        .for_each(|d, &x| *d *= x.cos());
                    send(*a, d);
                }
                Op::Cos(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(*a))
                        .for_each(|d, &x| *d *= -x.sin());
                    send(*a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        send(*p, g.slice(s![.., start..start + w]).to_owned());
                        start += w;
                    }
                }
                Op::SliceCols(a, start) => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    d.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    send(*a, d);
                }
                Op::Transpose(a) => send(*a, g.t().to_owned()),
                Op::MeanRows(a) => {
                    let n = self.value(*a).nrows();
                    let row = g.mapv(|v| v / n as f64);
                    send(*a, row.broadcast((n, row.ncols())).expect("row").to_owned());
                }
                Op::BroadcastRows(a) => send(*a, g.sum_axis(Axis(0)).insert_axis(Axis(0))),
                Op::Sum(a) => send(*a, Array2::from_elem(self.value(*a).raw_dim(), g[[0, 0]])),
                Op::SpMM(m, x) => {
                    let mut d = Array2::zeros(self.value(*x).raw_dim());
                    for r in 0..m.n_rows() {
                        let (cols, vals) = m.row(r);
                        let gr = g.row(r);
                        for (&c, &v) in cols.iter().zip(vals) {
                            d.row_mut(c).scaled_add(v, &gr);
                        }
                    }
                    send(*x, d);
                }
                Op::GatherRows(a, idx) => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    for (r, &src) in idx.iter().enumerate() {
                        let mut row = d.row_mut(src);
                        row += &g.row(r);
                    }
                    send(*a, d);
                }
                Op::Chebyshev {
                    op,
                    coeffs,
                    x,
                    terms,
                } => {
                    let c: Vec<f64> = self.value(*coeffs).iter().copied().collect();
                    if self.nodes[coeffs.0].needs_grad {
                        let dc = Array2::from_shape_fn((1, c.len()), |(_, k)| {
                            let ip = (&g * &terms[k]).sum();
                            if k == 0 {
                                0.5 * ip
                            } else {
                                ip
                            }
                        });
                        send(*coeffs, dc);
                    }
                    if self.nodes[x.0].needs_grad {
                        let back = chebyshev_terms(
                            &op.laplacian,
                            op.scale,
                            op.lambda_max,
                            g.view(),
                            c.len() - 1,
                        )?;
                        send(*x, combine_terms(&c, &back));
                    }
                }
                Op::EdgeDot(q, k, pattern, scale) => {
                    let (qv, kv) = (self.value(*q), self.value(*k));
                    let mut dq = Array2::zeros(qv.raw_dim());
                    let mut dk = Array2::zeros(kv.raw_dim());
                    for e in 0..pattern.n_edges() {
                        let (i, j) = (pattern.rows[e], pattern.cols[e]);
                        let ge = g[[e, 0]] * scale;
                        dq.row_mut(i).scaled_add(ge, &kv.row(j));
                        dk.row_mut(j).scaled_add(ge, &qv.row(i));
                    }
                    send(*q, dq);
                    send(*k, dk);
                }
                Op::EdgePairSum(a, b, pattern) => {
                    let mut da = Array2::zeros((pattern.n, 1));
                    let mut db = Array2::zeros((pattern.n, 1));
                    for e in 0..pattern.n_edges() {
                        da[[pattern.rows[e], 0]] += g[[e, 0]];
                        db[[pattern.cols[e], 0]] += g[[e, 0]];
                    }
                    send(*a, da);
                    send(*b, db);
                }
                Op::SparseSoftmax(scores, pattern) => {
                    let y = &node.value;
                    let mut d = Array2::zeros(y.raw_dim());
                    for i in 0..pattern.n {
                        let r = pattern.row_range(i);
                        let dot: f64 = r.clone().map(|e| y[[e, 0]] * g[[e, 0]]).sum();
                        for e in r {
                            d[[e, 0]] = y[[e, 0]] * (g[[e, 0]] - dot);
                        }
                    }
                    send(*scores, d);
                }
                Op::SparseAggregate(w, v, pattern) => {
                    let (wv, vv) = (self.value(*w), self.value(*v));
                    let mut dw = Array2::zeros(wv.raw_dim());
                    let mut dv = Array2::zeros(vv.raw_dim());
                    for e in 0..pattern.n_edges() {
                        let (i, j) = (pattern.rows[e], pattern.cols[e]);
                        dw[[e, 0]] = g.row(i).dot(&vv.row(j));
                        dv.row_mut(j).scaled_add(wv[[e, 0]], &g.row(i));
                    }
                    send(*w, dw);
                    send(*v, dv);
                }
                Op::MaskedSoftmax(scores) => {
                    let y = &node.value;
                    let mut d = Array2::zeros(y.raw_dim());
                    for ((yr, gr), mut dr) in y.rows().into_iter().zip(g.rows()).zip(d.rows_mut()) {
                        let dot = yr.dot(&gr);
                        Zip::from(&mut dr)
                            .and(&yr)
                            .and(&gr)
                            .for_each(|d, &y, &g| *d = y * (g - dot));
                    }
                    send(*scores, d);
                }
                Op::CrossEntropy {
                    logits,
                    probs,
                    targets,
                    weights,
                } => {
                    let scale = g[[0, 0]];
                    let mut d = probs.clone();
                    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        d[[r, t]] -= 1.0;
                        d.row_mut(r).mapv_inplace(|v| v * w * scale);
                    }
                    send(*logits, d);
                }
            }
        }
        Ok(())
    }
}
