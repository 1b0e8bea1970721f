//! Reverse-mode recording tape.
//!
//! Every op appends a node holding its forward value. Nodes are created in
//! topological order, so `backward` walks them once in reverse.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{matmul_nt_raw, matmul_raw, matmul_tn_raw};
use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::hypergraph::SparseMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    LogSigmoid(Var),
    Log(Var),
    Sqrt(Var),
    Square(Var),
    LogSoftmax(Var),
    Concat(Var, Var),
    RowMean(Var),
    RowSum(Var),
    RowDot(Var, Var),
    Sum(Var),
    Mean(Var),
    SpMM(Rc<SparseMatrix>, Var),
    GatherRows(Var, Rc<Vec<usize>>),
    Pick(Var, Rc<Vec<usize>>),
    Dropout(Var, Rc<Vec<f64>>),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records a forward computation for one backward pass.
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(ParamId, Var)>,
    training: bool,
    rng: ChaCha8Rng,
}

impl Tape {
    /// A tape in training mode (dropout active) whose dropout masks come
    /// from `seed`.
    pub fn new(seed: u64) -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
            training: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A tape in evaluation mode: dropout is the identity.
    pub fn eval() -> Self {
        let mut t = Tape::new(0);
        t.training = false;
        t
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        let requires_grad = match &op {
            Op::Leaf => true,
            _ => op_inputs(&op).iter().any(|v| self.nodes[v.0].requires_grad),
        };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Differentiable leaf.
    pub fn input(&mut self, value: Tensor) -> Result<Var> {
        self.push(value, Op::Leaf, "input")
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        let v = self.push(value, Op::Leaf, "constant")?;
        self.nodes[v.0].requires_grad = false;
        Ok(v)
    }

    /// Leaf holding the current value of a parameter. Registering the same
    /// parameter twice returns the same handle.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<Var> {
        if let Some(&(_, v)) = self.params.iter().find(|(p, _)| *p == id) {
            return Ok(v);
        }
        let v = self.push(store.get(id).clone(), Op::Leaf, "param")?;
        self.params.push((id, v));
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let ([n, k], [k2, m]) = (self.shape(a), self.shape(b));
        if k != k2 {
            return Err(Error::shape("matmul", format!("{n}x{k} * {k2}x{m}")));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), n, k, m);
        self.push(Tensor::new(n, m, out)?, Op::MatMul(a, b), "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let [r, c] = self.shape(a);
        let x = self.value(a).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = x[i * c + j];
            }
        }
        self.push(Tensor::new(c, r, out)?, Op::Transpose(a), "transpose")
    }

    /// Elementwise sum. `b` may also be a `1 x cols` row broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa == sb {
            let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
            self.push(out, Op::Add(a, b), "add")
        } else if sb[0] == 1 && sb[1] == sa[1] {
            let bias = self.value(b).data().to_vec();
            let mut out = self.value(a).clone();
            for row in out.data_mut().chunks_mut(sa[1].max(1)) {
                row.iter_mut().zip(&bias).for_each(|(x, y)| *x += y);
            }
            self.push(out, Op::AddRow(a, b), "add")
        } else {
            Err(Error::shape("add", format!("{sa:?} + {sb:?}")))
        }
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b), "sub")
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b), "mul")
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("div", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x / y);
        self.push(out, Op::Div(a, b), "div")
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let out = map(self.value(a), |x| x * c);
        self.push(out, Op::Scale(a, c), "scale")
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        let out = map(self.value(a), |x| x + c);
        self.push(out, Op::AddScalar(a), "add_scalar")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = map(self.value(a), |x| x.max(0.0));
        self.push(out, Op::Relu(a), "relu")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = map(self.value(a), sigmoid);
        self.push(out, Op::Sigmoid(a), "sigmoid")
    }

    /// `log(sigmoid(x))`, evaluated without overflow.
    pub fn log_sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = map(self.value(a), log_sigmoid);
        self.push(out, Op::LogSigmoid(a), "log_sigmoid")
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let out = map(self.value(a), f64::ln);
        self.push(out, Op::Log(a), "log")
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        let out = map(self.value(a), f64::sqrt);
        self.push(out, Op::Sqrt(a), "sqrt")
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        let out = map(self.value(a), |x| x * x);
        self.push(out, Op::Square(a), "square")
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let cols = x.cols();
        if cols == 0 {
            return Err(Error::shape("log_softmax", "zero columns"));
        }
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(cols) {
            let arg = (0..cols).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            let mx = row[arg];
            let rest: f64 = (0..cols).filter(|&c| c != arg).map(|c| (row[c] - mx).exp()).sum();
            let tail = rest.ln_1p();
            row.iter_mut().for_each(|v| *v = (*v - mx) - tail);
        }
        self.push(out, Op::LogSoftmax(a), "log_softmax")
    }

    /// Column-wise concatenation `[a | b]`.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let ([ra, ca], [rb, cb]) = (self.shape(a), self.shape(b));
        if ra != rb {
            return Err(Error::shape("concat", format!("{ra} rows vs {rb} rows")));
        }
        let (xa, xb) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(ra * (ca + cb));
        for r in 0..ra {
            out.extend_from_slice(&xa[r * ca..(r + 1) * ca]);
            out.extend_from_slice(&xb[r * cb..(r + 1) * cb]);
        }
        self.push(Tensor::new(ra, ca + cb, out)?, Op::Concat(a, b), "concat")
    }

    /// Mean over rows: `r x c -> 1 x c`.
    pub fn row_mean(&mut self, a: Var) -> Result<Var> {
        let [r, c] = self.shape(a);
        if r == 0 {
            return Err(Error::InvalidArgument("row_mean of zero rows".into()));
        }
        let x = self.value(a).data();
        let mut out = vec![0.0; c];
        for row in x.chunks(c.max(1)) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        out.iter_mut().for_each(|o| *o /= r as f64);
        self.push(Tensor::new(1, c, out)?, Op::RowMean(a), "row_mean")
    }

    /// Sum over columns: `r x c -> r x 1`.
    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        let [r, c] = self.shape(a);
        let x = self.value(a).data();
        let out = (0..r).map(|i| x[i * c..(i + 1) * c].iter().sum()).collect();
        self.push(Tensor::new(r, 1, out)?, Op::RowSum(a), "row_sum")
    }

    /// Row-wise inner products: `r x c, r x c -> r x 1`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("row_dot", a, b)?;
        let [r, c] = self.shape(a);
        let (xa, xb) = (self.value(a).data(), self.value(b).data());
        let out = (0..r)
            .map(|i| {
                xa[i * c..(i + 1) * c]
                    .iter()
                    .zip(&xb[i * c..(i + 1) * c])
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect();
        self.push(Tensor::new(r, 1, out)?, Op::RowDot(a, b), "row_dot")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), "sum")
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.is_empty() {
            return Err(Error::InvalidArgument("mean of empty tensor".into()));
        }
        let s = x.data().iter().sum::<f64>() / x.len() as f64;
        self.push(Tensor::scalar(s), Op::Mean(a), "mean")
    }

    /// Constant sparse matrix times a recorded dense value.
    pub fn spmm(&mut self, s: Rc<SparseMatrix>, x: Var) -> Result<Var> {
        let [r, c] = self.shape(x);
        if s.cols() != r {
            return Err(Error::shape(
                "spmm",
                format!("{}x{} * {r}x{c}", s.rows(), s.cols()),
            ));
        }
        let out = s.mul_dense(self.value(x).data(), c);
        let rows = s.rows();
        self.push(Tensor::new(rows, c, out)?, Op::SpMM(s, x), "spmm")
    }

    /// Select (and possibly repeat) rows.
    pub fn gather_rows(&mut self, a: Var, idx: Rc<Vec<usize>>) -> Result<Var> {
        let [r, c] = self.shape(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= r) {
            return Err(Error::shape("gather_rows", format!("row {bad} of {r}")));
        }
        let x = self.value(a).data();
        let mut out = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            out.extend_from_slice(&x[i * c..(i + 1) * c]);
        }
        let n = idx.len();
        self.push(Tensor::new(n, c, out)?, Op::GatherRows(a, idx), "gather_rows")
    }

    /// One entry per row: `out[r] = a[r, cols[r]]`.
    pub fn pick(&mut self, a: Var, cols: Rc<Vec<usize>>) -> Result<Var> {
        let [r, c] = self.shape(a);
        if cols.len() != r {
            return Err(Error::shape("pick", format!("{} indices for {r} rows", cols.len())));
        }
        if let Some(&bad) = cols.iter().find(|&&j| j >= c) {
            return Err(Error::InvalidArgument(format!("column {bad} out of {c}")));
        }
        let x = self.value(a).data();
        let out = cols.iter().enumerate().map(|(i, &j)| x[i * c + j]).collect();
        self.push(Tensor::new(r, 1, out)?, Op::Pick(a, cols), "pick")
    }

    /// Inverted dropout: in training mode entries are zeroed with
    /// probability `p` and survivors scaled by `1 / (1 - p)`.
    pub fn dropout(&mut self, a: Var, p: f64) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dropout rate {p} not in [0, 1)")));
        }
        if !self.training || p == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - p);
        let n = self.value(a).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.gen::<f64>() < p { 0.0 } else { keep })
            .collect();
        let out = {
            let x = self.value(a);
            let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
            Tensor::new(x.rows(), x.cols(), data)?
        };
        self.push(out, Op::Dropout(a, Rc::new(mask)), "dropout")
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    /// Reverse pass from a scalar. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != [1, 1] {
            return Err(Error::shape(
                "backward",
                format!("loss must be 1x1, got {:?}", self.shape(loss)),
            ));
        }
        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = (0..n).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[i];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients {
            grads,
            shapes,
            params: self.params,
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| self.nodes[v.0].value.data();
        let shp = |v: Var| self.nodes[v.0].value.shape();
        let out = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let ([n, k], [_, m]) = (shp(*a), shp(*b));
                if self.wants(*a) {
                    let ga = matmul_nt_raw(g, val(*b), n, m, k);
                    acc(grads, *a, &ga);
                }
                if self.wants(*b) {
                    let gb = matmul_tn_raw(val(*a), g, n, k, m);
                    acc(grads, *b, &gb);
                }
            }
            Op::Transpose(a) => {
                let [r, c] = shp(*a);
                let mut ga = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        ga[i * c + j] = g[j * r + i];
                    }
                }
                acc(grads, *a, &ga);
            }
            Op::Add(a, b) => {
                acc(grads, *a, g);
                acc(grads, *b, g);
            }
            Op::AddRow(a, b) => {
                acc(grads, *a, g);
                if self.wants(*b) {
                    let c = shp(*b)[1];
                    let mut gb = vec![0.0; c];
                    for row in g.chunks(c.max(1)) {
                        gb.iter_mut().zip(row).for_each(|(x, y)| *x += y);
                    }
                    acc(grads, *b, &gb);
                }
            }
            Op::Sub(a, b) => {
                acc(grads, *a, g);
                if self.wants(*b) {
                    let gb: Vec<f64> = g.iter().map(|x| -x).collect();
                    acc(grads, *b, &gb);
                }
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    acc(grads, *a, &mul3(g, val(*b), |g, y| g * y));
                }
                if self.wants(*b) {
                    acc(grads, *b, &mul3(g, val(*a), |g, x| g * x));
                }
            }
            Op::Div(a, b) => {
                if self.wants(*a) {
                    acc(grads, *a, &mul3(g, val(*b), |g, y| g / y));
                }
                if self.wants(*b) {
                    let gb: Vec<f64> = g
                        .iter()
                        .zip(val(*a))
                        .zip(val(*b))
                        .map(|((g, x), y)| -g * x / (y * y))
                        .collect();
                    acc(grads, *b, &gb);
                }
            }
            Op::Scale(a, c) => acc(grads, *a, &g.iter().map(|x| x * c).collect::<Vec<_>>()),
            Op::AddScalar(a) => acc(grads, *a, g),
            Op::Relu(a) => acc(grads, *a, &mul3(g, val(*a), |g, x| if x > 0.0 { g } else { 0.0 })),
            Op::Sigmoid(a) => acc(grads, *a, &mul3(g, out, |g, y| g * y * (1.0 - y))),
            Op::LogSigmoid(a) => acc(grads, *a, &mul3(g, val(*a), |g, x| g * sigmoid(-x))),
            Op::Log(a) => acc(grads, *a, &mul3(g, val(*a), |g, x| g / x)),
            Op::Sqrt(a) => acc(grads, *a, &mul3(g, out, |g, y| if y > 0.0 { g / (2.0 * y) } else { 0.0 })),
            Op::Square(a) => acc(grads, *a, &mul3(g, val(*a), |g, x| 2.0 * g * x)),
            Op::LogSoftmax(a) => {
                let c = node.value.cols();
                let mut ga = vec![0.0; g.len()];
                for ((gr, yr), outr) in g.chunks(c).zip(out.chunks(c)).zip(ga.chunks_mut(c)) {
                    let s: f64 = gr.iter().sum();
                    for ((o, gi), yi) in outr.iter_mut().zip(gr).zip(yr) {
                        *o = gi - yi.exp() * s;
                    }
                }
                acc(grads, *a, &ga);
            }
            Op::Concat(a, b) => {
                let ([r, ca], [_, cb]) = (shp(*a), shp(*b));
                let w = ca + cb;
                let mut ga = Vec::with_capacity(r * ca);
                let mut gb = Vec::with_capacity(r * cb);
                for i in 0..r {
                    ga.extend_from_slice(&g[i * w..i * w + ca]);
                    gb.extend_from_slice(&g[i * w + ca..(i + 1) * w]);
                }
                acc(grads, *a, &ga);
                acc(grads, *b, &gb);
            }
            Op::RowMean(a) => {
                let [r, c] = shp(*a);
                let mut ga = vec![0.0; r * c];
                for row in ga.chunks_mut(c.max(1)) {
                    row.iter_mut().zip(g).for_each(|(x, y)| *x = y / r as f64);
                }
                acc(grads, *a, &ga);
            }
            Op::RowSum(a) => {
                let [r, c] = shp(*a);
                let mut ga = vec![0.0; r * c];
                for (i, row) in ga.chunks_mut(c.max(1)).enumerate().take(r) {
                    row.iter_mut().for_each(|x| *x = g[i]);
                }
                acc(grads, *a, &ga);
            }
            Op::RowDot(a, b) => {
                let [r, c] = shp(*a);
                let (xa, xb) = (val(*a), val(*b));
                if self.wants(*a) {
                    let ga: Vec<f64> = (0..r * c).map(|p| g[p / c] * xb[p]).collect();
                    acc(grads, *a, &ga);
                }
                if self.wants(*b) {
                    let gb: Vec<f64> = (0..r * c).map(|p| g[p / c] * xa[p]).collect();
                    acc(grads, *b, &gb);
                }
            }
            Op::Sum(a) => {
                let n = self.nodes[a.0].value.len();
                acc(grads, *a, &vec![g[0]; n]);
            }
            Op::Mean(a) => {
                let n = self.nodes[a.0].value.len();
                acc(grads, *a, &vec![g[0] / n as f64; n]);
            }
            Op::SpMM(s, x) => {
                let c = shp(*x)[1];
                acc(grads, *x, &s.transpose_mul_dense(g, c));
            }
            Op::GatherRows(a, idx) => {
                let [r, c] = shp(*a);
                let mut ga = vec![0.0; r * c];
                for (k, &i) in idx.iter().enumerate() {
                    ga[i * c..(i + 1) * c]
                        .iter_mut()
                        .zip(&g[k * c..(k + 1) * c])
                        .for_each(|(x, y)| *x += y);
                }
                acc(grads, *a, &ga);
            }
            Op::Pick(a, cols) => {
                let [r, c] = shp(*a);
                let mut ga = vec![0.0; r * c];
                for (i, &j) in cols.iter().enumerate() {
                    ga[i * c + j] = g[i];
                }
                acc(grads, *a, &ga);
            }
            Op::Dropout(a, mask) => acc(grads, *a, &mul3(g, mask, |g, m| g * m)),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<[usize; 2]>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    /// Gradient with respect to a recorded value (zero if it did not reach the loss).
    pub fn wrt(&self, v: Var) -> Tensor {
        let [r, c] = self.shapes[v.0];
        match &self.grads[v.0] {
            Some(g) => Tensor::new(r, c, g.clone()).expect("gradient shape"),
            None => Tensor::zeros(r, c),
        }
    }

    /// Gradient for a parameter, `None` if it was never put on the tape.
    pub fn param(&self, id: ParamId) -> Option<Tensor> {
        self.params
            .iter()
            .find(|(p, _)| *p == id)
            .map(|&(_, v)| self.wrt(v))
    }

    pub fn params(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.params.iter().map(|(p, _)| *p)
    }
}

fn op_inputs(op: &Op) -> Vec<Var> {
    match op {
        Op::Leaf => vec![],
        Op::MatMul(a, b)
        | Op::Add(a, b)
        | Op::AddRow(a, b)
        | Op::Sub(a, b)
        | Op::Mul(a, b)
        | Op::Div(a, b)
        | Op::Concat(a, b)
        | Op::RowDot(a, b) => vec![*a, *b],
        Op::Transpose(a)
        | Op::Scale(a, _)
        | Op::AddScalar(a)
        | Op::Relu(a)
        | Op::Sigmoid(a)
        | Op::LogSigmoid(a)
        | Op::Log(a)
        | Op::Sqrt(a)
        | Op::Square(a)
        | Op::LogSoftmax(a)
        | Op::RowMean(a)
        | Op::RowSum(a)
        | Op::Sum(a)
        | Op::Mean(a)
        | Op::SpMM(_, a)
        | Op::GatherRows(a, _)
        | Op::Pick(a, _)
        | Op::Dropout(a, _) => vec![*a],
    }
}

fn acc(grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
    match &mut grads[v.0] {
        Some(existing) => existing.iter_mut().zip(g).for_each(|(x, y)| *x += y),
        slot @ None => *slot = Some(g.to_vec()),
    }
}

fn mul3(g: &[f64], x: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    g.iter().zip(x).map(|(&a, &b)| f(a, b)).collect()
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(x.rows(), x.cols(), x.data().iter().map(|&v| f(v)).collect()).expect("same shape")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.rows(), a.cols(), data).expect("same shape")
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}
