use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub step: f64,
    /// Check at most this many coordinates of each parameter, chosen at random.
    pub max_coords_per_param: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_coords_per_param: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter and flat index of the worst coordinate.
    pub worst: Option<(ParamId, usize)>,
    pub coords_checked: usize,
}

/// Relative error `|a − n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

fn scalar_loss(
    f: &mut impl FnMut(&mut Tape, &ParamStore) -> Result<Var>,
    store: &ParamStore,
) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = f(&mut tape, store)?;
    Ok(tape.value(loss).sum())
}

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences for every parameter in `store`. Parameter values are
/// restored afterwards; gradients are left holding the analytic result.
pub fn gradient_check(
    mut f: impl FnMut(&mut Tape, &ParamStore) -> Result<Var>,
    store: &mut ParamStore,
    opts: GradCheck,
) -> Result<GradCheckReport> {
    store.zero_grad();
    let mut tape = Tape::new();
    let loss = f(&mut tape, store)?;
    tape.backward(loss, store)?;
    drop(tape);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coords_checked: 0,
    };
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        let len = store.value(id).len();
        let coords: Vec<usize> = match opts.max_coords_per_param {
            Some(k) if k < len => sample(&mut rng, len, k).into_vec(),
            _ => (0..len).collect(),
        };
        for idx in coords {
            let original = store.value(id).as_slice().expect("standard layout")[idx];
            let mut eval = |store: &mut ParamStore, v: f64| {
                store.value_mut(id).as_slice_mut().expect("standard layout")[idx] = v;
                scalar_loss(&mut f, store)
            };
            let plus = eval(store, original + opts.step);
            let minus = eval(store, original - opts.step);
            store.value_mut(id).as_slice_mut().expect("standard layout")[idx] = original;
            let numeric = (plus? - minus?) / (2.0 * opts.step);
            let analytic = store.grad(id).as_slice().expect("standard layout")[idx];
            let err = relative_error(analytic, numeric);
            report.coords_checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((id, idx));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::{gru_cell, mlp2, Activation};
    use ndarray::{array, Array2};
    use rand::Rng;
    use std::sync::Arc;

    fn random(
        store: &mut ParamStore,
        name: &str,
        r: usize,
        c: usize,
        rng: &mut ChaCha8Rng,
    ) -> ParamId {
        store
            .add(
                name,
                Array2::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0)),
            )
            .unwrap()
    }

    #[test]
    fn sum_of_squares_is_exact() {
        let mut store = ParamStore::new();
        let id = store.add("w", array![[0.3, -1.2, 2.0]]).unwrap();
        let rep = gradient_check(
            |t, s| {
                let w = t.param(s, id);
                let sq = t.mul(w, w)?;
                t.sum(sq)
            },
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error < 1e-9);
        assert_eq!(store.value(id), &array![[0.3, -1.2, 2.0]]);
    }

    #[test]
    fn constant_function() {
        let mut store = ParamStore::new();
        store.add("w", array![[1.0]]).unwrap();
        let rep = gradient_check(
            |t, _| t.constant(array![[4.0]]),
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert_eq!(rep.max_rel_error, 0.0);
    }

    #[test]
    fn matmul_gradient_is_ones_bt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let a = random(&mut store, "a", 3, 4, &mut rng);
        let b = random(&mut store, "b", 4, 2, &mut rng);
        let rep = gradient_check(
            |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let p = t.matmul(a, b)?;
                t.sum(p)
            },
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error < 1e-6);
        let want = Array2::<f64>::ones((3, 2)).dot(&store.value(b).t());
        assert!((store.grad(a) - &want).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn mlp_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store = ParamStore::new();
        let x = random(&mut store, "x", 2, 4, &mut rng);
        let w1 = random(&mut store, "w1", 4, 3, &mut rng);
        let w2 = random(&mut store, "w2", 3, 5, &mut rng);
        let rep = gradient_check(
            |t, s| {
                let (x, w1, w2) = (t.param(s, x), t.param(s, w1), t.param(s, w2));
                let y = mlp2(t, x, w1, w2, None, None, Activation::Tanh)?;
                let y2 = t.mul(y, y)?;
                t.sum(y2)
            },
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error < 1e-5, "{rep:?}");
    }

    #[test]
    fn chained_gru_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let h0 = random(&mut store, "h0", 2, 3, &mut rng);
        let x = random(&mut store, "x", 2, 2, &mut rng);
        let w: Vec<_> = (0..3)
            .map(|k| random(&mut store, &format!("w{k}"), 2, 3, &mut rng))
            .collect();
        let u: Vec<_> = (0..3)
            .map(|k| random(&mut store, &format!("u{k}"), 3, 3, &mut rng))
            .collect();
        let b: Vec<_> = (0..3)
            .map(|k| random(&mut store, &format!("b{k}"), 1, 3, &mut rng))
            .collect();
        let rep = gradient_check(
            |t, s| {
                let wv = [0, 1, 2].map(|k| t.param(s, w[k]));
                let uv = [0, 1, 2].map(|k| t.param(s, u[k]));
                let bv = [0, 1, 2].map(|k| t.param(s, b[k]));
                let xv = t.param(s, x);
                let mut h = t.param(s, h0);
                for _ in 0..3 {
                    h = gru_cell(t, Some((xv, wv)), h, uv, bv)?;
                }
                let sq = t.mul(h, h)?;
                t.sum(sq)
            },
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error < 1e-5, "{rep:?}");
    }

    #[test]
    fn sparse_attention_and_cross_entropy_gradients() {
        use crate::graph::SparseMatrix;
        use crate::nn::tape::EdgePattern;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let adj = SparseMatrix::from_edge_list(
            4,
            4,
            &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
        )
        .unwrap();
        let p = Arc::new(EdgePattern::with_self_loops(&adj));
        let mut store = ParamStore::new();
        let q = random(&mut store, "q", 4, 3, &mut rng);
        let k = random(&mut store, "k", 4, 3, &mut rng);
        let v = random(&mut store, "v", 4, 2, &mut rng);
        let a = random(&mut store, "a", 4, 1, &mut rng);
        let rep = gradient_check(
            |t, s| {
                let (q, k, v, a) = (t.param(s, q), t.param(s, k), t.param(s, v), t.param(s, a));
                let sc = t.edge_dot(q, k, p.clone(), 0.5)?;
                let ps = t.edge_pair_sum(a, a, p.clone())?;
                let sc = t.add(sc, ps)?;
                let w = t.sparse_softmax(sc, p.clone())?;
                let out = t.sparse_aggregate(w, v, p.clone())?;
                t.cross_entropy(out, &[0, 1, 1, 0], Some(&[1.0, 3.0]))
            },
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error < 1e-5, "{rep:?}");
    }

    #[test]
    fn elementwise_and_shape_ops_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut store = ParamStore::new();
        let a = random(&mut store, "a", 3, 4, &mut rng);
        let r = random(&mut store, "r", 1, 2, &mut rng);
        let mask = Arc::new(array![
            [true, false, true, true],
            [false, false, false, false],
            [true, true, true, true]
        ]);
        let rep = gradient_check(
            |t, s| {
                let a = t.param(s, a);
                let r = t.param(s, r);
                let sn = t.sin(a)?;
                let cs = t.cos(a)?;
                let sg = t.sigmoid(a)?;
                let cat = t.concat_cols(&[sn, cs])?;
                let sl = t.slice_cols(cat, 3, 2)?;
                let sl = t.add_row(sl, r)?;
                let tr = t.transpose(sg)?;
                let mr = t.mean_rows(tr)?;
                let br = t.broadcast_rows(mr, 2)?;
                let sm = t.masked_softmax(a, mask.clone())?;
                let g = t.gather_rows(sm, Arc::new(vec![2, 0, 2]))?;
                let g = t.leaky_relu(g, 0.2)?;
                let s1 = t.sum(sl)?;
                let s2 = t.sum(br)?;
                let s3 = t.mean(g)?;
                let x = t.mul(s1, s2)?;
                let x = t.sub(x, s3)?;
                t.scale(x, 1.5)
            },
            &mut store,
            GradCheck::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error < 1e-5, "{rep:?}");
    }
}
