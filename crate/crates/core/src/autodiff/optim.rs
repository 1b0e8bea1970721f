//! Adam, plain gradient descent and reduce-on-plateau scheduling.

use super::{Gradients, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Option<Vec<f64>>>,
    v: Vec<Option<Vec<f64>>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every parameter that received a gradient.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<()> {
        let pairs: Vec<(ParamId, Tensor)> = grads
            .params()
            .filter_map(|p| grads.param(p).map(|g| (p, g)))
            .collect();
        self.step_with(store, &pairs)
    }

    /// Same as [`Adam::step`] with explicit gradients.
    pub fn step_with(&mut self, store: &mut ParamStore, grads: &[(ParamId, Tensor)]) -> Result<()> {
        for (id, g) in grads {
            if store.get(*id).shape() != g.shape() {
                return Err(Error::shape(
                    "adam_step",
                    format!("{} has shape {:?}, gradient {:?}", store.name(*id), store.get(*id).shape(), g.shape()),
                ));
            }
        }
        if self.m.len() < store.len() {
            self.m.resize(store.len(), None);
            self.v.resize(store.len(), None);
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (id, g) in grads {
            let i = id.index();
            let n = g.len();
            let m = self.m[i].get_or_insert_with(|| vec![0.0; n]);
            let v = self.v[i].get_or_insert_with(|| vec![0.0; n]);
            let p = store.get_mut(*id).data_mut();
            for k in 0..n {
                let gk = g.data()[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gk;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gk * gk;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// `theta <- theta - lr * grad` for every parameter with a gradient.
pub fn sgd_step(store: &mut ParamStore, grads: &Gradients, lr: f64) -> Result<()> {
    for id in grads.params() {
        if let Some(g) = grads.param(id) {
            if g.shape() != store.get(id).shape() {
                return Err(Error::shape("sgd_step", format!("{:?} vs {:?}", g.shape(), store.get(id).shape())));
            }
            store
                .get_mut(id)
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .for_each(|(p, g)| *p -= lr * g);
        }
    }
    Ok(())
}

/// Halves the learning rate when the monitored loss stops improving.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub threshold: f64,
    pub min_lr: f64,
    best: Option<f64>,
    num_bad: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64) -> Self {
        PlateauScheduler {
            lr,
            factor: 0.5,
            patience: 10,
            threshold: 1e-4,
            min_lr: 1e-6,
            best: None,
            num_bad: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Record one epoch's loss and return the learning rate for the next epoch.
    pub fn step(&mut self, loss: f64) -> f64 {
        let improved = match self.best {
            None => true,
            Some(b) => loss < b - self.threshold * b.abs(),
        };
        if improved {
            self.best = Some(loss);
            self.num_bad = 0;
        } else {
            self.num_bad += 1;
            if self.num_bad >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.num_bad = 0;
            }
        }
        self.lr
    }
}

/// Learning rate after replaying a loss history through a fresh scheduler.
pub fn plateau_lr(initial: f64, history: &[f64]) -> f64 {
    let mut s = PlateauScheduler::new(initial);
    history.iter().fold(initial, |_, &l| s.step(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn quad_grads(store: &ParamStore, id: ParamId) -> (f64, Gradients) {
        let mut t = Tape::eval();
        let w = t.param(store, id).unwrap();
        let sq = t.square(w).unwrap();
        let l = t.sum(sq).unwrap();
        let v = t.value(l).item();
        (v, t.backward(l).unwrap())
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::row_vector(vec![1.0, -2.0]));
        let before = s.clone();
        Adam::new(0.1).step_with(&mut s, &[(id, Tensor::zeros(1, 2))]).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn first_step_is_sign_times_lr() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::row_vector(vec![0.0, 0.0, 0.0]));
        let g = Tensor::row_vector(vec![3.0, -0.5, 1e-3]);
        Adam::new(0.01).step_with(&mut s, &[(id, g.clone())]).unwrap();
        for (p, g) in s.get(id).data().iter().zip(g.data()) {
            let expect = -0.01 * g / (g.abs() + 1e-8);
            assert!((p - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn two_steps_reduce_quadratic() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::row_vector(vec![1.5, -0.7]));
        let mut adam = Adam::new(0.1);
        let (l0, g) = quad_grads(&s, id);
        adam.step(&mut s, &g).unwrap();
        let (_, g) = quad_grads(&s, id);
        adam.step(&mut s, &g).unwrap();
        let (l2, _) = quad_grads(&s, id);
        assert!(l2 < l0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::zeros(2, 2));
        assert!(Adam::new(0.1).step_with(&mut s, &[(id, Tensor::zeros(1, 2))]).is_err());
    }

    #[test]
    fn scheduler_rules() {
        let dec: Vec<f64> = (0..30).map(|i| 10.0 - i as f64).collect();
        assert_eq!(plateau_lr(0.1, &dec), 0.1);
        // One best epoch then ten flat ones.
        assert_eq!(plateau_lr(0.1, &[1.0; 11]), 0.05);
        assert_eq!(plateau_lr(0.1, &[1.0; 10]), 0.1);
        assert_eq!(plateau_lr(1e-6, &[1.0; 50]), 1e-6);
    }
}
