//! Layers built from tape primitives. Activations are row-major: a batch of
//! `N` vectors is an `N×d` matrix and weights multiply on the right.

use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::Result;

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    LeakyRelu,
    Tanh,
}

pub fn activate(tape: &mut Tape, x: Var, act: Activation) -> Result<Var> {
    match act {
        Activation::LeakyRelu => tape.leaky_relu(x, LEAKY_SLOPE),
        Activation::Tanh => tape.tanh(x),
    }
}

/// `x·W (+ b)`.
pub fn linear(tape: &mut Tape, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    match b {
        Some(b) => tape.add_row(y, b),
        None => Ok(y),
    }
}

/// Two-layer perceptron `σ(x·W1 + b1)·W2 + b2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mlp2 {
    pub w1: ParamId,
    pub w2: ParamId,
    pub b1: Option<ParamId>,
    pub b2: Option<ParamId>,
    pub activation: Activation,
}

impl Mlp2 {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        dims: (usize, usize, usize),
        bias: bool,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let (d_in, d_hidden, d_out) = dims;
        let w1 = store.glorot(format!("{prefix}.w1"), d_in, d_hidden, rng)?;
        let w2 = store.glorot(format!("{prefix}.w2"), d_hidden, d_out, rng)?;
        let (b1, b2) = if bias {
            (
                Some(store.zeros(format!("{prefix}.b1"), 1, d_hidden)?),
                Some(store.zeros(format!("{prefix}.b2"), 1, d_out)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            w1,
            w2,
            b1,
            b2,
            activation,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let w1 = tape.param(store, self.w1);
        let w2 = tape.param(store, self.w2);
        let b1 = self.b1.map(|b| tape.param(store, b));
        let b2 = self.b2.map(|b| tape.param(store, b));
        mlp2(tape, x, w1, w2, b1, b2, self.activation)
    }
}

pub fn mlp2(
    tape: &mut Tape,
    x: Var,
    w1: Var,
    w2: Var,
    b1: Option<Var>,
    b2: Option<Var>,
    act: Activation,
) -> Result<Var> {
    let h = linear(tape, x, w1, b1)?;
    let h = activate(tape, h, act)?;
    linear(tape, h, w2, b2)
}

/// GRU parameters. Input weights are absent when the cell runs without
/// external input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GruCell {
    pub w: Option<[ParamId; 3]>,
    pub u: [ParamId; 3],
    pub b: [ParamId; 3],
}

impl GruCell {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: Option<usize>,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let gates = ["z", "r", "h"];
        let w = match input_dim {
            Some(d) => {
                let mut ids = Vec::with_capacity(3);
                for g in gates {
                    ids.push(store.glorot(format!("{prefix}.w_{g}"), d, hidden, rng)?);
                }
                Some([ids[0], ids[1], ids[2]])
            }
            None => None,
        };
        let mut u = Vec::with_capacity(3);
        let mut b = Vec::with_capacity(3);
        for g in gates {
            u.push(store.glorot(format!("{prefix}.u_{g}"), hidden, hidden, rng)?);
            b.push(store.zeros(format!("{prefix}.b_{g}"), 1, hidden)?);
        }
        Ok(Self {
            w,
            u: [u[0], u[1], u[2]],
            b: [b[0], b[1], b[2]],
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: Option<Var>,
        h: Var,
    ) -> Result<Var> {
        let w = match (self.w, x) {
            (Some(w), Some(_)) => Some(w.map(|id| tape.param(store, id))),
            (None, None) => None,
            _ => {
                return Err(crate::error::Error::Argument(
                    "GRU input presence does not match its parameters".into(),
                ))
            }
        };
        let u = self.u.map(|id| tape.param(store, id));
        let b = self.b.map(|id| tape.param(store, id));
        let input = match (w, x) {
            (Some(w), Some(x)) => Some((x, w)),
            _ => None,
        };
        gru_cell(tape, input, h, u, b)
    }
}

/// Standard GRU on rows of `h`:
/// `z = σ(xW_z + hU_z + b_z)`, `r = σ(xW_r + hU_r + b_r)`,
/// `h̃ = tanh(xW_h + (r⊙h)U_h + b_h)`, `h' = (1−z)⊙h + z⊙h̃`.
pub fn gru_cell(
    tape: &mut Tape,
    input: Option<(Var, [Var; 3])>,
    h: Var,
    u: [Var; 3],
    b: [Var; 3],
) -> Result<Var> {
    let gate = |tape: &mut Tape, k: usize, state: Var| -> Result<Var> {
        let mut pre = tape.matmul(state, u[k])?;
        if let Some((x, w)) = input {
            let xw = tape.matmul(x, w[k])?;
            pre = tape.add(pre, xw)?;
        }
        tape.add_row(pre, b[k])
    };
    let z = gate(tape, 0, h)?;
    let z = tape.sigmoid(z)?;
    let r = gate(tape, 1, h)?;
    let r = tape.sigmoid(r)?;
    let rh = tape.mul(r, h)?;
    let cand = gate(tape, 2, rh)?;
    let cand = tape.tanh(cand)?;
    let keep = tape.affine(z, -1.0, 1.0)?;
    let old = tape.mul(keep, h)?;
    let new = tape.mul(z, cand)?;
    tape.add(old, new)
}
