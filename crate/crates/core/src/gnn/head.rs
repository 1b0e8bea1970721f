use rand::Rng;

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

/// Two-layer MLP: linear, ReLU, dropout, linear.
#[derive(Debug, Clone)]
pub struct Head {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    dropout: f64,
    in_dim: usize,
    out_dim: usize,
}

impl Head {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Self {
        Head {
            w1: store.add_glorot(format!("{name}.w1"), in_dim, hidden, rng),
            b1: store.add_zeros(format!("{name}.b1"), 1, hidden),
            w2: store.add_glorot(format!("{name}.w2"), hidden, out_dim, rng),
            b2: store.add_zeros(format!("{name}.b2"), 1, out_dim),
            dropout,
            in_dim,
            out_dim,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// `[w1, b1, w2, b2]`.
    pub fn params(&self) -> Vec<ParamId> {
        vec![self.w1, self.b1, self.w2, self.b2]
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        if tape.value(x).cols() != self.in_dim {
            return Err(Error::shape(
                "head",
                format!("{} input columns, head expects {}", tape.value(x).cols(), self.in_dim),
            ));
        }
        let w1 = tape.param(store, self.w1)?;
        let b1 = tape.param(store, self.b1)?;
        let w2 = tape.param(store, self.w2)?;
        let b2 = tape.param(store, self.b2)?;
        let z = tape.matmul(x, w1)?;
        let z = tape.add(z, b1)?;
        let z = tape.relu(z)?;
        let z = tape.dropout(z, self.dropout)?;
        let z = tape.matmul(z, w2)?;
        tape.add(z, b2)
    }
}
