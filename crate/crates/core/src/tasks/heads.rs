use std::sync::Arc;

use rand::Rng;

use crate::config::{name_of, one_of, parse_value, Configurable};
use crate::error::{Error, Result};
use crate::nn::{Activation, Mlp2, ParamStore, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskKind {
    #[default]
    LinkPrediction,
    EdgeClassification,
    NodeClassification,
}

pub const TASK_KINDS: [(&str, TaskKind); 3] = [
    ("lp", TaskKind::LinkPrediction),
    ("ec", TaskKind::EdgeClassification),
    ("nc", TaskKind::NodeClassification),
];

pub fn parse_task_kind(value: &str) -> Result<TaskKind> {
    one_of("task", value, &TASK_KINDS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Output classes; link prediction always uses 2.
    pub n_classes: usize,
    pub negatives_per_positive: usize,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            kind: TaskKind::LinkPrediction,
            n_classes: 2,
            negatives_per_positive: 9,
        }
    }
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind != TaskKind::LinkPrediction && self.n_classes < 2 {
            return Err(Error::Config(format!(
                "n_classes must be at least 2, got {}",
                self.n_classes
            )));
        }
        if self.kind == TaskKind::LinkPrediction && self.negatives_per_positive == 0 {
            return Err(Error::Config(
                "negatives_per_positive must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        match self.kind {
            TaskKind::LinkPrediction => 2,
            _ => self.n_classes,
        }
    }

    pub fn pairwise(&self) -> bool {
        self.kind != TaskKind::NodeClassification
    }
}

impl Configurable for TaskSpec {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "task" => self.kind = parse_task_kind(value)?,
            "n_classes" => self.n_classes = parse_value(key, value)?,
            "negatives_per_positive" => self.negatives_per_positive = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(String, String)> {
        vec![
            ("task".into(), name_of(self.kind, &TASK_KINDS).into()),
            ("n_classes".into(), self.n_classes.to_string()),
            (
                "negatives_per_positive".into(),
                self.negatives_per_positive.to_string(),
            ),
        ]
    }
}

/// MLP on one embedding (nodes) or a concatenated pair (edges).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskHead {
    pub mlp: Mlp2,
    pub pairwise: bool,
}

impl TaskHead {
    pub fn register(
        store: &mut ParamStore,
        task: &TaskSpec,
        embedding_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let pairwise = task.pairwise();
        let d_in = if pairwise {
            2 * embedding_dim
        } else {
            embedding_dim
        };
        let mlp = Mlp2::register(
            store,
            "head",
            (d_in, embedding_dim, task.output_dim()),
            true,
            Activation::LeakyRelu,
            rng,
        )?;
        Ok(Self { mlp, pairwise })
    }

    /// Logits for the pairs `(src[i], dst[i])` of embedding rows.
    pub fn pair_logits(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        emb: Var,
        src: Vec<usize>,
        dst: Vec<usize>,
    ) -> Result<Var> {
        if src.len() != dst.len() {
            return Err(Error::Argument("pair index lists differ in length".into()));
        }
        let hu = tape.gather_rows(emb, Arc::new(src))?;
        let hv = tape.gather_rows(emb, Arc::new(dst))?;
        link_score(tape, store, &self.mlp, hu, hv)
    }

    pub fn node_logits(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        emb: Var,
        nodes: Vec<usize>,
    ) -> Result<Var> {
        let h = tape.gather_rows(emb, Arc::new(nodes))?;
        self.mlp.forward(tape, store, h)
    }
}

/// Logits of `head` on `h_u ‖ h_v`, one row per pair.
pub fn link_score(
    tape: &mut Tape,
    store: &ParamStore,
    head: &Mlp2,
    h_u: Var,
    h_v: Var,
) -> Result<Var> {
    if tape.shape(h_u) != tape.shape(h_v) {
        return Err(Error::shape(
            "link_score",
            format!("{:?} vs {:?}", tape.shape(h_u), tape.shape(h_v)),
        ));
    }
    let x = tape.concat_cols(&[h_u, h_v])?;
    head.forward(tape, store, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ParamStore, TaskHead) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let head = TaskHead::register(&mut store, &TaskSpec::default(), 4, &mut rng).unwrap();
        (store, head)
    }

    #[test]
    fn zero_head_gives_zero_logits() {
        let (mut store, head) = setup();
        for id in store.ids().collect::<Vec<_>>() {
            store.value_mut(id).fill(0.0);
        }
        let mut tape = Tape::new();
        let e = tape
            .constant(Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64))
            .unwrap();
        let l = head
            .pair_logits(&mut tape, &store, e, vec![0, 1], vec![2, 0])
            .unwrap();
        assert!(tape.value(l).iter().all(|&v| v == 0.0));
        assert_eq!(tape.shape(l), (2, 2));
    }

    #[test]
    fn gradient_reaches_both_endpoints() {
        let (mut store, head) = setup();
        let hu = store.add("hu", Array2::from_elem((1, 4), 0.3)).unwrap();
        let hv = store.add("hv", Array2::from_elem((1, 4), -0.7)).unwrap();
        let mut tape = Tape::new();
        let (a, b) = (tape.param(&store, hu), tape.param(&store, hv));
        let l = link_score(&mut tape, &store, &head.mlp, a, b).unwrap();
        let loss = tape.cross_entropy(l, &[1], None).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert!(store.grad(hu).iter().any(|g| g.abs() > 0.0));
        assert!(store.grad(hv).iter().any(|g| g.abs() > 0.0));
    }

    #[test]
    fn deterministic_and_dim_checked() {
        let (store, head) = setup();
        let run = || {
            let mut tape = Tape::new();
            let e = tape.constant(Array2::from_elem((2, 4), 0.5)).unwrap();
            let l = head
                .pair_logits(&mut tape, &store, e, vec![0], vec![1])
                .unwrap();
            tape.value(l).clone()
        };
        assert_eq!(run(), run());
        let mut tape = Tape::new();
        let a = tape.constant(Array2::zeros((1, 4))).unwrap();
        let b = tape.constant(Array2::zeros((1, 3))).unwrap();
        assert!(link_score(&mut tape, &store, &head.mlp, a, b).is_err());
    }

    #[test]
    fn task_spec_validation() {
        let bad = TaskSpec {
            kind: TaskKind::NodeClassification,
            n_classes: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TaskSpec {
            negatives_per_positive: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let mut t = TaskSpec::default();
        assert!(t.set("task", "nc").unwrap());
        assert_eq!(t.kind, TaskKind::NodeClassification);
        assert!(t.set("task", "xx").is_err());
    }
}
