//! Define-by-run reverse-mode differentiation.
//!
//! Every operation appends one node to a [`Tape`] and returns a [`Var`]
//! handle. Nodes are stored in creation order, so the tape is always in
//! topological order and [`Tape::backward`] is a single reverse sweep.
//!
//! Leaves come in two flavours: parameters ([`Tape::param`]) which receive
//! gradients, and constants ([`Tape::constant`], [`Tape::detach`]) which do
//! not. A node requires a gradient iff one of its inputs does, so a graph
//! built entirely from constants is never visited by `backward`.

use crate::error::{Error, Result};

use super::tensor::{gemm, Tensor};

/// Lower/upper clamp applied to probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// Handle to a node on a [`Tape`]. Only meaningful for the tape that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Neg(Var),
    Scale(Var, f64),
    AddScalar(Var),
    Log(Var),
    Exp(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    LeakyReluSlope,
    Square(Var),
    Sqrt(Var),
    Clamp(Var, f64, f64),
    Sum(Var),
    Mean(Var),
    SumAxis(Var, usize),
    MeanAxis(Var, usize),
    Bce {
        input: Var,
        targets: Vec<f64>,
    },
    SoftmaxCe {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::AddBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Neg(..) => "neg",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Log(..) => "log",
            Op::Exp(..) => "exp",
            Op::Tanh(..) => "tanh",
            Op::Sigmoid(..) => "sigmoid",
            Op::Relu(..) => "relu",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::LeakyReluSlope => "leaky_relu_slope",
            Op::Square(..) => "square",
            Op::Sqrt(..) => "sqrt",
            Op::Clamp(..) => "clamp",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::SumAxis(..) => "sum_axis",
            Op::MeanAxis(..) => "mean_axis",
            Op::Bce { .. } => "bce_from_probability",
            Op::SoftmaxCe { .. } => "softmax_cross_entropy",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients produced by one [`Tape::backward`] call.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of `var`, or `None` if it was not reached.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Gradient of `var`, zero-filled if the node was unreachable.
    pub fn wrt(&self, var: Var) -> Tensor {
        match self.get(var) {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[var.0]),
        }
    }

    /// `true` when no node received a gradient.
    pub fn is_empty(&self) -> bool {
        self.grads.iter().all(Option::is_none)
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    /// Copies the value of `var` into a new constant leaf, cutting the graph.
    pub fn detach(&mut self, var: Var) -> Var {
        let value = self.nodes[var.0].value.clone();
        self.constant(value)
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, value: Tensor, inputs: &[Var]) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::NonFinite { op: op.name() });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::Shape {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(ta.shape().to_vec(), data).expect("shapes checked")
    }

    fn unary(&mut self, op: Op, x: Var, f: impl Fn(f64) -> f64) -> Result<Var> {
        let value = self.value(x).map(f);
        self.push(op, value, &[x])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push(Op::MatMul(a, b), value, &[a, b])
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        if self.shape(x).len() != 2 {
            return Err(Error::Shape {
                op: "transpose",
                left: self.shape(x).to_vec(),
                right: vec![],
            });
        }
        let value = self.value(x).transpose();
        self.push(Op::Transpose(x), value, &[x])
    }

    /// Adds a bias vector `[n]` to every row of `x: [B × n]`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(bias));
        if tx.shape().len() != 2 || tb.len() != tx.cols() {
            return Err(Error::Shape {
                op: "add_bias",
                left: tx.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let mut value = tx.clone();
        let c = tx.cols();
        if c > 0 {
            for row in value.data_mut().chunks_mut(c) {
                row.iter_mut().zip(tb.data()).for_each(|(v, b)| *v += b);
            }
        }
        self.push(Op::AddBias(x, bias), value, &[x, bias])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.zip_with(a, b, |x, y| x + y);
        self.push(Op::Add(a, b), value, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.zip_with(a, b, |x, y| x - y);
        self.push(Op::Sub(a, b), value, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.zip_with(a, b, |x, y| x * y);
        self.push(Op::Mul(a, b), value, &[a, b])
    }

    pub fn neg(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Neg(x), x, |v| -v)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        self.unary(Op::Scale(x, factor), x, |v| v * factor)
    }

    pub fn add_scalar(&mut self, x: Var, offset: f64) -> Result<Var> {
        self.unary(Op::AddScalar(x), x, |v| v + offset)
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Log(x), x, f64::ln)
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Exp(x), x, f64::exp)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Tanh(x), x, f64::tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Sigmoid(x), x, sigmoid)
    }

    /// `max(x, 0)`; the derivative at 0 is taken as 0.
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Relu(x), x, |v| if v > 0.0 { v } else { 0.0 })
    }

    /// `x` for `x > 0`, `slope · x` otherwise; the derivative at 0 is `slope`.
    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        self.unary(Op::LeakyRelu(x, slope), x, |v| {
            if v > 0.0 {
                v
            } else {
                slope * v
            }
        })
    }

    /// Derivative of [`Tape::leaky_relu`] evaluated at `x`: 1 or `slope`.
    ///
    /// Piecewise constant, so it passes no gradient back to `x`. Used to
    /// express input gradients of a network as ordinary tape operations.
    pub fn leaky_relu_slope(&mut self, x: Var, slope: f64) -> Result<Var> {
        self.unary(Op::LeakyReluSlope, x, |v| if v > 0.0 { 1.0 } else { slope })
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Square(x), x, |v| v * v)
    }

    /// Square root; negative inputs are a numeric error. The derivative at 0
    /// is taken as 0 so that zero-norm vectors stay differentiable.
    pub fn sqrt(&mut self, x: Var) -> Result<Var> {
        self.unary(Op::Sqrt(x), x, f64::sqrt)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        self.unary(Op::Clamp(x, lo, hi), x, |v| v.clamp(lo, hi))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let value = Tensor::scalar(self.value(x).sum());
        self.push(Op::Sum(x), value, &[x])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        let n = t.len().max(1) as f64;
        let value = Tensor::scalar(t.sum() / n);
        self.push(Op::Mean(x), value, &[x])
    }

    fn reduce_axis(&self, x: Var, axis: usize) -> Result<(usize, usize, Tensor)> {
        let t = self.value(x);
        let (r, c) = match (t.shape().len(), axis) {
            (1, 0) => (1, t.len()),
            (2, 0 | 1) => (t.shape()[0], t.shape()[1]),
            _ => {
                return Err(Error::InvalidAxis {
                    axis,
                    shape: t.shape().to_vec(),
                })
            }
        };
        let (rows_out, data) = if axis == 0 {
            let mut out = vec![0.0; c];
            for row in t.data().chunks(c.max(1)) {
                out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
            }
            (c, out)
        } else {
            (
                r,
                t.data()
                    .chunks(c.max(1))
                    .map(|row| row.iter().sum())
                    .collect(),
            )
        };
        let out_shape = if t.shape().len() == 1 {
            vec![1]
        } else {
            vec![rows_out]
        };
        Ok((r, c, Tensor::new(out_shape, data)?))
    }

    /// Sum along `axis`. For a matrix, axis 0 gives column sums `[cols]` and
    /// axis 1 gives row sums `[rows]`.
    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let (_, _, value) = self.reduce_axis(x, axis)?;
        self.push(Op::SumAxis(x, axis), value, &[x])
    }

    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let (r, c, value) = self.reduce_axis(x, axis)?;
        let n = if axis == 0 && self.shape(x).len() == 2 {
            r
        } else {
            c
        };
        let value = value.map(|v| v / n.max(1) as f64);
        self.push(Op::MeanAxis(x, axis), value, &[x])
    }

    /// `−mean(t·ln p + (1−t)·ln(1−p))` with `p` clamped to `[ε, 1−ε]`.
    pub fn bce_from_probability(&mut self, p: Var, targets: &[f64]) -> Result<Var> {
        let t = self.value(p);
        if targets.len() != t.len() {
            return Err(Error::Shape {
                op: "bce_from_probability",
                left: t.shape().to_vec(),
                right: vec![targets.len()],
            });
        }
        let n = t.len().max(1) as f64;
        let total: f64 = t
            .data()
            .iter()
            .zip(targets)
            .map(|(&p, &y)| {
                let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
                y * p.ln() + (1.0 - y) * (1.0 - p).ln()
            })
            .sum();
        let op = Op::Bce {
            input: p,
            targets: targets.to_vec(),
        };
        self.push(op, Tensor::scalar(-total / n), &[p])
    }

    /// Same as [`Tape::bce_from_probability`] with every target equal to `target`.
    pub fn bce_uniform(&mut self, p: Var, target: f64) -> Result<Var> {
        let n = self.value(p).len();
        self.bce_from_probability(p, &vec![target; n])
    }

    /// Mean softmax cross-entropy of `logits: [B × K]` against class indices.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let t = self.value(logits);
        if t.shape().len() != 2 || t.rows() != labels.len() {
            return Err(Error::Shape {
                op: "softmax_cross_entropy",
                left: t.shape().to_vec(),
                right: vec![labels.len()],
            });
        }
        let k = t.cols();
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {k} classes"
            )));
        }
        let mut probs = Vec::with_capacity(t.len());
        let mut total = 0.0;
        for (row, &y) in t.iter_rows().zip(labels) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
            total += -(row[y] - max - denom.ln());
            probs.extend(row.iter().map(|v| (v - max).exp() / denom));
        }
        let n = labels.len().max(1) as f64;
        let op = Op::SoftmaxCe {
            logits,
            labels: labels.to_vec(),
            probs,
        };
        self.push(op, Tensor::scalar(total / n), &[logits])
    }

    /// Reverse sweep from a scalar `root`.
    ///
    /// Nodes that do not require gradients (constants and everything built
    /// only from constants) are skipped and report no gradient.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(Error::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        if self.nodes[root.0].requires_grad {
            grads[root.0] = Some(vec![1.0]);
        }
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let shapes = self
            .nodes
            .iter()
            .map(|n| n.value.shape().to_vec())
            .collect();
        let mut grads: Vec<Option<Tensor>> = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                g.map(|g| {
                    Tensor::new(self.nodes[i].value.shape().to_vec(), g).expect("gradient shape")
                })
            })
            .collect();
        grads.resize_with(self.nodes.len(), || None);
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let y = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                self.accumulate(grads, *a, |da| {
                    gemm(m, n, k, g, false, tb.data(), true, da, 1.0)
                });
                self.accumulate(grads, *b, |db| {
                    gemm(k, m, n, ta.data(), true, g, false, db, 1.0)
                });
            }
            Op::Transpose(x) => {
                let (r, c) = (node.value.shape()[0], node.value.shape()[1]);
                self.accumulate(grads, *x, |dx| {
                    // x is [c × r]
                    for i in 0..r {
                        for j in 0..c {
                            dx[j * r + i] += g[i * c + j];
                        }
                    }
                });
            }
            Op::AddBias(x, bias) => {
                self.accumulate(grads, *x, |dx| add_into(dx, g));
                let c = node.value.cols();
                self.accumulate(grads, *bias, |db| {
                    if c > 0 {
                        for row in g.chunks(c) {
                            add_into(db, row);
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |d| add_into(d, g));
                self.accumulate(grads, *b, |d| add_into(d, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |d| add_into(d, g));
                self.accumulate(grads, *b, |d| {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d -= g)
                });
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, |d| {
                    for ((d, g), v) in d.iter_mut().zip(g).zip(tb) {
                        *d += g * v;
                    }
                });
                self.accumulate(grads, *b, |d| {
                    for ((d, g), v) in d.iter_mut().zip(g).zip(ta) {
                        *d += g * v;
                    }
                });
            }
            Op::Neg(x) => self.elementwise(grads, *x, g, |_, _| -1.0),
            Op::Scale(x, f) => self.elementwise(grads, *x, g, |_, _| *f),
            Op::AddScalar(x) => self.accumulate(grads, *x, |d| add_into(d, g)),
            Op::Log(x) => self.elementwise_in(grads, *x, g, |xv| 1.0 / xv),
            Op::Exp(x) => self.elementwise_out(grads, *x, g, y, |yv| yv),
            Op::Tanh(x) => self.elementwise_out(grads, *x, g, y, |yv| 1.0 - yv * yv),
            Op::Sigmoid(x) => self.elementwise_out(grads, *x, g, y, |yv| yv * (1.0 - yv)),
            Op::Relu(x) => self.elementwise_in(grads, *x, g, |xv| if xv > 0.0 { 1.0 } else { 0.0 }),
            Op::LeakyRelu(x, slope) => {
                let s = *slope;
                self.elementwise_in(grads, *x, g, |xv| if xv > 0.0 { 1.0 } else { s })
            }
            Op::LeakyReluSlope => {}
            Op::Square(x) => self.elementwise_in(grads, *x, g, |xv| 2.0 * xv),
            Op::Sqrt(x) => {
                self.elementwise_out(grads, *x, g, y, |yv| if yv > 0.0 { 0.5 / yv } else { 0.0 })
            }
            Op::Clamp(x, lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                self.elementwise_in(
                    grads,
                    *x,
                    g,
                    |xv| if xv >= lo && xv <= hi { 1.0 } else { 0.0 },
                )
            }
            Op::Sum(x) => self.accumulate(grads, *x, |d| d.iter_mut().for_each(|d| *d += g[0])),
            Op::Mean(x) => {
                let n = self.value(*x).len().max(1) as f64;
                self.accumulate(grads, *x, |d| d.iter_mut().for_each(|d| *d += g[0] / n));
            }
            Op::SumAxis(x, axis) | Op::MeanAxis(x, axis) => {
                let t = self.value(*x);
                let (r, c) = if t.shape().len() == 1 {
                    (1, t.len())
                } else {
                    (t.shape()[0], t.shape()[1])
                };
                let scale = match (&node.op, *axis) {
                    (Op::SumAxis(..), _) => 1.0,
                    (_, 0) if t.shape().len() == 2 => 1.0 / r.max(1) as f64,
                    _ => 1.0 / c.max(1) as f64,
                };
                let along_rows = *axis == 0;
                self.accumulate(grads, *x, |d| {
                    for i in 0..r {
                        for j in 0..c {
                            let gi = if t.shape().len() == 1 {
                                0
                            } else if along_rows {
                                j
                            } else {
                                i
                            };
                            d[i * c + j] += g[gi] * scale;
                        }
                    }
                });
            }
            Op::Bce { input, targets } => {
                let p = self.value(*input).data();
                let n = p.len().max(1) as f64;
                self.accumulate(grads, *input, |d| {
                    for ((d, &pv), &t) in d.iter_mut().zip(p).zip(targets) {
                        if (PROB_EPS..=1.0 - PROB_EPS).contains(&pv) {
                            *d += -g[0] * (t / pv - (1.0 - t) / (1.0 - pv)) / n;
                        }
                    }
                });
            }
            Op::SoftmaxCe {
                logits,
                labels,
                probs,
            } => {
                let k = self.value(*logits).cols();
                let n = labels.len().max(1) as f64;
                self.accumulate(grads, *logits, |d| {
                    for (row, &y) in labels.iter().enumerate() {
                        for j in 0..k {
                            let onehot = if j == y { 1.0 } else { 0.0 };
                            d[row * k + j] += g[0] * (probs[row * k + j] - onehot) / n;
                        }
                    }
                });
            }
        }
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], target: Var, f: impl FnOnce(&mut [f64])) {
        let node = &self.nodes[target.0];
        if !node.requires_grad {
            return;
        }
        let slot = grads[target.0].get_or_insert_with(|| vec![0.0; node.value.len()]);
        f(slot);
    }

    fn elementwise(
        &self,
        grads: &mut [Option<Vec<f64>>],
        x: Var,
        g: &[f64],
        f: impl Fn(f64, f64) -> f64,
    ) {
        let xv = self.value(x).data();
        self.accumulate(grads, x, |d| {
            for ((d, &g), &v) in d.iter_mut().zip(g).zip(xv) {
                *d += g * f(v, g);
            }
        });
    }

    fn elementwise_in(
        &self,
        grads: &mut [Option<Vec<f64>>],
        x: Var,
        g: &[f64],
        f: impl Fn(f64) -> f64,
    ) {
        self.elementwise(grads, x, g, |v, _| f(v));
    }

    fn elementwise_out(
        &self,
        grads: &mut [Option<Vec<f64>>],
        x: Var,
        g: &[f64],
        y: &[f64],
        f: impl Fn(f64) -> f64,
    ) {
        self.accumulate(grads, x, |d| {
            for ((d, &g), &yv) in d.iter_mut().zip(g).zip(y) {
                *d += g * f(yv);
            }
        });
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
