use ndarray::Array2;

use super::params::ParamStore;

/// Adam with bias correction and optional global gradient-norm clipping.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_grad_norm: Option<f64>,
    step: i32,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_grad_norm: None,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// Applies one update from the gradients currently held in `store`.
    pub fn step(&mut self, store: &mut ParamStore) {
        if self.m.len() != store.len() {
            let ids: Vec<_> = store.ids().collect();
            self.m = ids
                .iter()
                .map(|&id| Array2::zeros(store.value(id).raw_dim()))
                .collect();
            self.v = self.m.clone();
        }
        let clip = match self.max_grad_norm {
            Some(max) => {
                let norm = store.grad_norm();
                if norm > max {
                    max / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let ids: Vec<_> = store.ids().collect();
        for (k, id) in ids.into_iter().enumerate() {
            let g = store.grad(id).clone();
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
            ndarray::Zip::from(&mut *store.value_mut(id))
                .and(m)
                .and(v)
                .and(&g)
                .for_each(|w, m, v, &g| {
                    let g = g * clip;
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                });
        }
    }
}
