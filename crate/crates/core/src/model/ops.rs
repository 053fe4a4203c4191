//! Building blocks of the model as functions over tape variables.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::nn::{EdgePattern, Tape, Var, LEAKY_SLOPE};

/// Slope of the leaky ReLU applied to attention logits in the GAT-style aggregator.
pub const GAT_SLOPE: f64 = 0.2;

/// Row-normalized `D̂⁻¹Â` with `Â = A + I`.
pub fn propagation_matrix(adjacency: &SparseMatrix) -> SparseMatrix {
    let n = adjacency.n_rows();
    let mut entries = Vec::with_capacity(adjacency.nnz() + n);
    for i in 0..n {
        let (cols, vals) = adjacency.row(i);
        let deg = 1.0 + vals.iter().sum::<f64>();
        entries.push((i, i, 1.0 / deg));
        for (&j, &w) in cols.iter().zip(vals) {
            if j != i {
                entries.push((i, j, w / deg));
            }
        }
    }
    SparseMatrix::from_edge_list(n, n, &entries).expect("distinct entries")
}

/// `σ((D̂⁻¹Â) H W)` with leaky ReLU.
pub fn message_passing_layer(
    tape: &mut Tape,
    propagation: &Arc<SparseMatrix>,
    h: Var,
    w: Var,
) -> Result<Var> {
    let (d_in, d_out) = tape.shape(w);
    if tape.shape(h).1 != d_in {
        return Err(Error::shape(
            "message_passing_layer",
            format!("H {:?} with W {:?}", tape.shape(h), (d_in, d_out)),
        ));
    }
    let z = if d_out < d_in {
        let hw = tape.matmul(h, w)?;
        tape.spmm(propagation.clone(), hw)?
    } else {
        let ph = tape.spmm(propagation.clone(), h)?;
        tape.matmul(ph, w)?
    };
    tape.leaky_relu(z, LEAKY_SLOPE)
}

/// Sinusoidal encoding: entry `2i` is `sin(t / 10000^{2i/d_t})`, entry
/// `2i+1` the matching cosine.
pub fn timestep_encoding(t: usize, d_t: usize) -> Result<Vec<f64>> {
    if !d_t.is_multiple_of(2) {
        return Err(Error::Config(format!("d_t must be even, got {d_t}")));
    }
    let mut out = Vec::with_capacity(d_t);
    for i in 0..d_t / 2 {
        let angle = t as f64 / 10000f64.powf(2.0 * i as f64 / d_t as f64);
        out.push(angle.sin());
        out.push(angle.cos());
    }
    Ok(out)
}

/// `sin(v) ‖ cos(v)` row-wise.
pub fn fourier_features(tape: &mut Tape, v: Var) -> Result<Var> {
    let s = tape.sin(v)?;
    let c = tape.cos(v)?;
    tape.concat_cols(&[s, c])
}

/// Plain-vector version of [`fourier_features`].
pub fn fourier_vector(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| x.sin())
        .chain(v.iter().map(|x| x.cos()))
        .collect()
}

/// Per-node broadcast of a constant row.
pub fn constant_rows(tape: &mut Tape, row: &[f64], n: usize) -> Result<Var> {
    let a = Array2::from_shape_fn((n, row.len()), |(_, j)| row[j]);
    tape.constant(a)
}

/// Query, key and value projections of one attention head.
#[derive(Debug, Clone, Copy)]
pub struct AttentionHead {
    pub q: Var,
    pub k: Var,
    pub v: Var,
}

/// Sparse dot-product attention over `N(i) ∪ {i}`:
/// `score(i,j) = Σ (W_Q x_i ⊙ W_K x_j) / d_out`, heads concatenated.
pub fn am_forward(
    tape: &mut Tape,
    pattern: &Arc<EdgePattern>,
    x: Var,
    heads: &[AttentionHead],
) -> Result<Var> {
    Ok(am_forward_with_weights(tape, pattern, x, heads)?.0)
}

/// [`am_forward`] also returning each head's `E×1` attention weights.
pub fn am_forward_with_weights(
    tape: &mut Tape,
    pattern: &Arc<EdgePattern>,
    x: Var,
    heads: &[AttentionHead],
) -> Result<(Var, Vec<Var>)> {
    let mut outs = Vec::with_capacity(heads.len());
    let mut weights = Vec::with_capacity(heads.len());
    for h in heads {
        let d_out = tape.shape(h.q).1;
        let q = tape.matmul(x, h.q)?;
        let k = tape.matmul(x, h.k)?;
        let v = tape.matmul(x, h.v)?;
        let scores = tape.edge_dot(q, k, pattern.clone(), 1.0 / d_out as f64)?;
        let w = tape.sparse_softmax(scores, pattern.clone())?;
        outs.push(tape.sparse_aggregate(w, v, pattern.clone())?);
        weights.push(w);
    }
    Ok((tape.concat_cols(&outs)?, weights))
}

/// Projection and attention vectors of one GAT-style head.
#[derive(Debug, Clone, Copy)]
pub struct GatHead {
    pub w: Var,
    pub a_src: Var,
    pub a_dst: Var,
}

/// `e_ij = LeakyReLU(a_srcᵀ z_i + a_dstᵀ z_j)`, softmax over `N(i) ∪ {i}`,
/// output `Σ_j α_ij z_j` with `z = XW`; heads concatenated.
pub fn gat_forward(
    tape: &mut Tape,
    pattern: &Arc<EdgePattern>,
    x: Var,
    heads: &[GatHead],
) -> Result<Var> {
    let mut outs = Vec::with_capacity(heads.len());
    for h in heads {
        let z = tape.matmul(x, h.w)?;
        let src = tape.matmul(z, h.a_src)?;
        let dst = tape.matmul(z, h.a_dst)?;
        let e = tape.edge_pair_sum(src, dst, pattern.clone())?;
        let e = tape.leaky_relu(e, GAT_SLOPE)?;
        let w = tape.sparse_softmax(e, pattern.clone())?;
        outs.push(tape.sparse_aggregate(w, z, pattern.clone())?);
    }
    tape.concat_cols(&outs)
}
