//! Reverse-mode autodiff over small dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass; [`Var`] is a cheap
//! handle into it. Tapes are single-threaded and meant to live for one sample
//! or one step.

use std::cell::RefCell;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::tensor::Tensor;
use crate::error::{Error, Result};

static BACKWARD_CALLS: AtomicUsize = AtomicUsize::new(0);

/// Number of backward passes run in this process. Used as an instrumentation
/// hook to assert that evaluation code never differentiates.
pub fn backward_calls() -> usize {
    BACKWARD_CALLS.load(Ordering::SeqCst)
}

/// A differentiable operation implemented outside the tape (e.g. a circuit).
pub trait CustomOp {
    /// Gradients w.r.t. each input given the upstream gradient of the output.
    /// Entries for inputs with `needs_grad[i] == false` may be `None`.
    fn backward(
        &self,
        inputs: &[&Tensor],
        output: &Tensor,
        upstream: &Tensor,
        needs_grad: &[bool],
    ) -> Vec<Option<Tensor>>;
}

enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    MulRow(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    MatMul(usize, usize),
    Transpose(usize),
    Reshape(usize),
    Relu(usize),
    Exp(usize),
    Square(usize),
    Mean(usize),
    Sum(usize),
    SoftmaxRows(usize),
    NormalizeRows(usize),
    LayerNormRows { x: usize, inv_std: Vec<f64> },
    Gather { src: usize, indices: Vec<usize> },
    StackRows(Vec<usize>),
    Custom { inputs: Vec<usize>, op: Box<dyn CustomOp> },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a tape node.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var").field("idx", &self.idx).finish()
    }
}

/// Result of a backward pass.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var<'_>) -> Option<&Tensor> {
        self.grads.get(v.idx).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros of `v`'s shape if nothing flowed into it.
    pub fn wrt_or_zeros(&self, v: Var<'_>) -> Tensor {
        self.wrt(v)
            .cloned()
            .unwrap_or_else(|| {
                let (r, c) = v.shape();
                Tensor::zeros(r, c)
            })
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A differentiable leaf (a trainable parameter).
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// A non-differentiable leaf (data).
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    fn push(&self, value: Tensor, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            idx: nodes.len() - 1,
        }
    }

    fn requires(&self, idx: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        idx.iter().any(|&i| nodes[i].requires_grad)
    }

    fn derived(&self, value: Tensor, op: Op, parents: &[usize]) -> Var<'_> {
        let rg = self.requires(parents);
        self.push(value, op, rg)
    }

    /// Records a custom operation whose output has already been computed.
    pub fn custom<'t>(
        &'t self,
        inputs: &[Var<'t>],
        output: Tensor,
        op: Box<dyn CustomOp>,
    ) -> Var<'t> {
        let idx: Vec<usize> = inputs.iter().map(|v| v.idx).collect();
        let rg = self.requires(&idx);
        self.push(output, Op::Custom { inputs: idx, op }, rg)
    }

    /// Backpropagates from a scalar `output` seeded with 1.
    pub fn backward(&self, output: Var<'_>) -> Result<Gradients> {
        if output.shape() != (1, 1) {
            return Err(Error::shape(
                "backward",
                format!("seed must be 1x1, got {:?}", output.shape()),
            ));
        }
        self.backward_with(output, Tensor::scalar(1.0))
    }

    /// Backpropagates an arbitrary upstream gradient into `output`.
    pub fn backward_with(&self, output: Var<'_>, seed: Tensor) -> Result<Gradients> {
        BACKWARD_CALLS.fetch_add(1, Ordering::SeqCst);
        let nodes = self.nodes.borrow();
        if seed.shape() != nodes[output.idx].value.shape() {
            return Err(Error::shape("backward", "seed shape differs from output"));
        }
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[output.idx] = Some(seed);

        let accumulate = |grads: &mut Vec<Option<Tensor>>, i: usize, g: Tensor| {
            if !nodes[i].requires_grad {
                return;
            }
            match &mut grads[i] {
                Some(acc) => acc.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        };

        for i in (0..=output.idx).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &nodes[i];
            let val = |j: usize| &nodes[j].value;
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.map(|v| -v));
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::Mul(a, b) => {
                    accumulate(&mut grads, *a, g.zip_map(val(*b), |x, y| x * y));
                    accumulate(&mut grads, *b, g.zip_map(val(*a), |x, y| x * y));
                }
                Op::AddRow(a, b) => {
                    accumulate(&mut grads, *b, column_sums(&g));
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::MulRow(a, b) => {
                    let (rows, cols) = g.shape();
                    let bv = val(*b);
                    let av = val(*a);
                    let mut ga = g.clone();
                    let mut gb = Tensor::zeros(1, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            ga.set(r, c, g.get(r, c) * bv.get(0, c));
                            gb.data_mut()[c] += g.get(r, c) * av.get(r, c);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.map(|v| v * s)),
                Op::Offset(a) => accumulate(&mut grads, *a, g.clone()),
                Op::MatMul(a, b) => {
                    if nodes[*a].requires_grad {
                        let ga = g.matmul(&val(*b).transpose()).expect("matmul shapes");
                        accumulate(&mut grads, *a, ga);
                    }
                    if nodes[*b].requires_grad {
                        let gb = val(*a).transpose().matmul(&g).expect("matmul shapes");
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, g.transpose()),
                Op::Reshape(a) => {
                    let (r, c) = val(*a).shape();
                    accumulate(&mut grads, *a, g.reshape(r, c).expect("reshape"));
                }
                Op::Relu(a) => {
                    accumulate(&mut grads, *a, g.zip_map(val(*a), |d, x| if x > 0.0 { d } else { 0.0 }))
                }
                Op::Exp(a) => accumulate(&mut grads, *a, g.zip_map(&node.value, |d, y| d * y)),
                Op::Square(a) => accumulate(&mut grads, *a, g.zip_map(val(*a), |d, x| 2.0 * d * x)),
                Op::Mean(a) => {
                    let (r, c) = val(*a).shape();
                    let n = (r * c) as f64;
                    accumulate(&mut grads, *a, Tensor::filled(r, c, g.get(0, 0) / n));
                }
                Op::Sum(a) => {
                    let (r, c) = val(*a).shape();
                    accumulate(&mut grads, *a, Tensor::filled(r, c, g.get(0, 0)));
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut ga = g.clone();
                    for r in 0..y.rows() {
                        let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(d, y)| d * y).sum();
                        for c in 0..y.cols() {
                            ga.set(r, c, y.get(r, c) * (g.get(r, c) - dot));
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::NormalizeRows(a) => {
                    let y = &node.value;
                    let x = val(*a);
                    let mut ga = g.clone();
                    for r in 0..y.rows() {
                        let s: f64 = x.row(r).iter().sum();
                        let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(d, y)| d * y).sum();
                        for c in 0..y.cols() {
                            ga.set(r, c, (g.get(r, c) - dot) / s);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::LayerNormRows { x, inv_std } => {
                    let y = &node.value;
                    let n = y.cols() as f64;
                    let mut ga = g.clone();
                    for r in 0..y.rows() {
                        let mean_g: f64 = g.row(r).iter().sum::<f64>() / n;
                        let mean_gy: f64 =
                            g.row(r).iter().zip(y.row(r)).map(|(d, y)| d * y).sum::<f64>() / n;
                        for c in 0..y.cols() {
                            let v = inv_std[r] * (g.get(r, c) - mean_g - y.get(r, c) * mean_gy);
                            ga.set(r, c, v);
                        }
                    }
                    accumulate(&mut grads, *x, ga);
                }
                Op::Gather { src, indices } => {
                    let (r, c) = val(*src).shape();
                    let mut gs = Tensor::zeros(r, c);
                    for (k, &ix) in indices.iter().enumerate() {
                        gs.data_mut()[ix] += g.data()[k];
                    }
                    accumulate(&mut grads, *src, gs);
                }
                Op::StackRows(parts) => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let (pr, pc) = val(p).shape();
                        debug_assert_eq!(pc, cols);
                        let slice = g.data()[offset * cols..(offset + pr) * cols].to_vec();
                        accumulate(&mut grads, p, Tensor::new(pr, pc, slice).expect("stack"));
                        offset += pr;
                    }
                }
                Op::Custom { inputs, op } => {
                    let ins: Vec<&Tensor> = inputs.iter().map(|&j| val(j)).collect();
                    let needs: Vec<bool> = inputs.iter().map(|&j| nodes[j].requires_grad).collect();
                    let gs = op.backward(&ins, &node.value, &g, &needs);
                    for (&j, gj) in inputs.iter().zip(gs) {
                        if let Some(gj) = gj {
                            accumulate(&mut grads, j, gj);
                        }
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn column_sums(g: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(1, g.cols());
    for r in 0..g.rows() {
        for (o, v) in out.data_mut().iter_mut().zip(g.row(r)) {
            *o += v;
        }
    }
    out
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        Err(Error::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())))
    } else {
        Ok(())
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.idx].value.clone()
    }

    /// Borrowing accessor for the node value.
    pub fn with_value<R>(&self, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.idx].value)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.with_value(Tensor::shape)
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.idx].requires_grad
    }

    fn unary(self, op: Op, f: impl FnOnce(&Tensor) -> Tensor) -> Var<'t> {
        let out = self.with_value(f);
        self.tape.derived(out, op, &[self.idx])
    }

    fn binary(
        self,
        other: Var<'t>,
        name: &'static str,
        op: Op,
        f: impl FnOnce(&Tensor, &Tensor) -> Result<Tensor>,
    ) -> Result<Var<'t>> {
        let out = {
            let nodes = self.tape.nodes.borrow();
            f(&nodes[self.idx].value, &nodes[other.idx].value).map_err(|e| match e {
                Error::Shape { detail, .. } => Error::shape(name, detail),
                e => e,
            })?
        };
        Ok(self.tape.derived(out, op, &[self.idx, other.idx]))
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "add", Op::Add(self.idx, other.idx), |a, b| {
            same_shape("add", a, b)?;
            Ok(a.zip_map(b, |x, y| x + y))
        })
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "sub", Op::Sub(self.idx, other.idx), |a, b| {
            same_shape("sub", a, b)?;
            Ok(a.zip_map(b, |x, y| x - y))
        })
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "mul", Op::Mul(self.idx, other.idx), |a, b| {
            same_shape("mul", a, b)?;
            Ok(a.zip_map(b, |x, y| x * y))
        })
    }

    /// Adds a `1 × cols` row to every row.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        self.binary(row, "add_row", Op::AddRow(self.idx, row.idx), |a, b| {
            if b.rows() != 1 || b.cols() != a.cols() {
                return Err(Error::shape("add_row", format!("{:?} + {:?}", a.shape(), b.shape())));
            }
            let mut out = a.clone();
            for r in 0..a.rows() {
                for c in 0..a.cols() {
                    out.set(r, c, a.get(r, c) + b.get(0, c));
                }
            }
            Ok(out)
        })
    }

    /// Multiplies every row elementwise by a `1 × cols` row.
    pub fn mul_row(self, row: Var<'t>) -> Result<Var<'t>> {
        self.binary(row, "mul_row", Op::MulRow(self.idx, row.idx), |a, b| {
            if b.rows() != 1 || b.cols() != a.cols() {
                return Err(Error::shape("mul_row", format!("{:?} * {:?}", a.shape(), b.shape())));
            }
            let mut out = a.clone();
            for r in 0..a.rows() {
                for c in 0..a.cols() {
                    out.set(r, c, a.get(r, c) * b.get(0, c));
                }
            }
            Ok(out)
        })
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "matmul", Op::MatMul(self.idx, other.idx), |a, b| a.matmul(b))
    }

    pub fn scale(self, s: f64) -> Var<'t> {
        self.unary(Op::Scale(self.idx, s), |a| a.map(|v| v * s))
    }

    /// Adds a constant to every element.
    pub fn offset(self, c: f64) -> Var<'t> {
        self.unary(Op::Offset(self.idx), |a| a.map(|v| v + c))
    }

    pub fn transpose(self) -> Var<'t> {
        self.unary(Op::Transpose(self.idx), Tensor::transpose)
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Result<Var<'t>> {
        let out = self.with_value(|a| a.reshape(rows, cols))?;
        Ok(self.tape.derived(out, Op::Reshape(self.idx), &[self.idx]))
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu(self.idx), |a| a.map(|v| v.max(0.0)))
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(Op::Exp(self.idx), |a| a.map(f64::exp))
    }

    pub fn square(self) -> Var<'t> {
        self.unary(Op::Square(self.idx), |a| a.map(|v| v * v))
    }

    /// Mean of all elements, as a 1×1 tensor.
    pub fn mean(self) -> Var<'t> {
        self.unary(Op::Mean(self.idx), |a| Tensor::scalar(a.sum() / a.len() as f64))
    }

    pub fn sum(self) -> Var<'t> {
        self.unary(Op::Sum(self.idx), |a| Tensor::scalar(a.sum()))
    }

    /// Row-wise softmax.
    pub fn softmax_rows(self) -> Var<'t> {
        self.unary(Op::SoftmaxRows(self.idx), |a| {
            let mut out = a.clone();
            for r in 0..a.rows() {
                let m = a.row(r).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut s = 0.0;
                for c in 0..a.cols() {
                    let e = (a.get(r, c) - m).exp();
                    out.set(r, c, e);
                    s += e;
                }
                for c in 0..a.cols() {
                    out.set(r, c, out.get(r, c) / s);
                }
            }
            out
        })
    }

    /// Divides each row by its sum. Entries must be positive.
    pub fn normalize_rows(self) -> Var<'t> {
        self.unary(Op::NormalizeRows(self.idx), |a| {
            let mut out = a.clone();
            for r in 0..a.rows() {
                let s: f64 = a.row(r).iter().sum();
                for c in 0..a.cols() {
                    out.set(r, c, a.get(r, c) / s);
                }
            }
            out
        })
    }

    /// Normalises each row to zero mean and unit (population) variance:
    /// `(x − μ) / sqrt(σ² + eps)`. No affine terms.
    pub fn layer_norm_rows(self, eps: f64) -> Result<Var<'t>> {
        if eps <= 0.0 {
            return Err(Error::Config(format!("layer norm epsilon must be positive, got {eps}")));
        }
        let (out, inv_std) = self.with_value(|a| {
            let n = a.cols() as f64;
            let mut out = a.clone();
            let mut inv_std = Vec::with_capacity(a.rows());
            for r in 0..a.rows() {
                let mu = a.row(r).iter().sum::<f64>() / n;
                let var = a.row(r).iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
                let is = 1.0 / (var + eps).sqrt();
                for c in 0..a.cols() {
                    out.set(r, c, (a.get(r, c) - mu) * is);
                }
                inv_std.push(is);
            }
            (out, inv_std)
        });
        Ok(self.tape.derived(
            out,
            Op::LayerNormRows {
                x: self.idx,
                inv_std,
            },
            &[self.idx],
        ))
    }

    /// Picks flat (row-major) elements into a `rows × cols` tensor.
    pub fn gather(self, indices: Vec<usize>, rows: usize, cols: usize) -> Result<Var<'t>> {
        if indices.len() != rows * cols {
            return Err(Error::shape("gather", format!("{} indices for {rows}x{cols}", indices.len())));
        }
        let out = self.with_value(|a| {
            if let Some(&bad) = indices.iter().find(|&&i| i >= a.len()) {
                return Err(Error::shape("gather", format!("index {bad} out of {}", a.len())));
            }
            Tensor::new(rows, cols, indices.iter().map(|&i| a.data()[i]).collect())
        })?;
        Ok(self.tape.derived(out, Op::Gather { src: self.idx, indices }, &[self.idx]))
    }

    /// Row `r` as a `1 × cols` tensor.
    pub fn row(self, r: usize) -> Result<Var<'t>> {
        let (rows, cols) = self.shape();
        if r >= rows {
            return Err(Error::shape("row", format!("row {r} of {rows}")));
        }
        self.gather((r * cols..(r + 1) * cols).collect(), 1, cols)
    }

    /// Column `c` as a `rows × 1` tensor.
    pub fn column(self, c: usize) -> Result<Var<'t>> {
        let (rows, cols) = self.shape();
        if c >= cols {
            return Err(Error::shape("column", format!("column {c} of {cols}")));
        }
        self.gather((0..rows).map(|r| r * cols + c).collect(), rows, 1)
    }
}

/// Stacks tensors with equal column counts vertically.
pub fn stack_rows<'t>(parts: &[Var<'t>]) -> Result<Var<'t>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::shape("stack_rows", "no inputs"))?;
    let tape = first.tape;
    let cols = first.shape().1;
    let mut data = Vec::new();
    let mut rows = 0;
    for p in parts {
        let (r, c) = p.shape();
        if c != cols {
            return Err(Error::shape("stack_rows", format!("{c} columns, expected {cols}")));
        }
        p.with_value(|v| data.extend_from_slice(v.data()));
        rows += r;
    }
    let idx: Vec<usize> = parts.iter().map(|p| p.idx).collect();
    let out = Tensor::new(rows, cols, data)?;
    Ok(tape.derived(out, Op::StackRows(idx.clone()), &idx))
}

/// `x · W + b` with `x: r × in`, `W: in × out`, `b: 1 × out`.
pub fn affine<'t>(x: Var<'t>, w: Var<'t>, b: Var<'t>) -> Result<Var<'t>> {
    x.matmul(w)?.add_row(b)
}
