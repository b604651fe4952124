//! Reverse-mode differentiation over [`Matrix`] values.
//!
//! A [`Graph`] is an append-only tape: every operation pushes a node holding
//! its value, the operation that produced it and the ids of its parents.
//! Because parents always precede children, walking the tape backwards is a
//! reverse topological order and each node is visited exactly once.
//! Gradients are accumulated, so a node feeding several consumers receives
//! the sum of their contributions.

use crate::error::{Error, Result};

use super::matrix::{gemm, Matrix};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Softmax normalization axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Normalize each column (over rows, i.e. over time for `T x D` inputs).
    Rows,
    /// Normalize each row.
    Cols,
}

#[derive(Clone, Debug)]
enum Op {
    Param,
    Constant,
    MatMul(NodeId, NodeId),
    MatMulNt(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    Sigmoid(NodeId),
    Softmax(NodeId, Axis),
    Splice(NodeId, Vec<isize>),
    SumRows(NodeId),
    SumAll(NodeId),
    RepeatCols(NodeId, usize),
    ClampMin(NodeId, f64),
    Sqrt(NodeId),
    ConcatCols(Vec<NodeId>),
    NormalizeRows(NodeId, f64),
    CrossEntropy(NodeId, Vec<usize>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Param => "param",
            Op::Constant => "constant",
            Op::MatMul(..) => "matmul",
            Op::MatMulNt(..) => "matmul_nt",
            Op::AddBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Softmax(..) => "softmax",
            Op::Splice(..) => "splice",
            Op::SumRows(_) => "sum_rows",
            Op::SumAll(_) => "sum_all",
            Op::RepeatCols(..) => "repeat_cols",
            Op::ClampMin(..) => "clamp_min",
            Op::Sqrt(_) => "sqrt",
            Op::ConcatCols(_) => "concat_cols",
            Op::NormalizeRows(..) => "normalize_rows",
            Op::CrossEntropy(..) => "cross_entropy",
        }
    }

    fn parents(&self) -> Vec<NodeId> {
        match self {
            Op::Param | Op::Constant => vec![],
            Op::MatMul(a, b)
            | Op::MatMulNt(a, b)
            | Op::AddBias(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::Softmax(a, _)
            | Op::Splice(a, _)
            | Op::SumRows(a)
            | Op::SumAll(a)
            | Op::RepeatCols(a, _)
            | Op::ClampMin(a, _)
            | Op::Sqrt(a)
            | Op::NormalizeRows(a, _)
            | Op::CrossEntropy(a, _) => vec![*a],
            Op::ConcatCols(parts) => parts.clone(),
        }
    }
}

struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Tape of differentiable matrix operations.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar root with respect to every node that requires them.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient for `id`; `None` for constants and nodes the root does not depend on.
    pub fn get(&self, id: NodeId) -> Option<&Matrix> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, id: NodeId) -> Option<Matrix> {
        self.grads.get_mut(id.0).and_then(Option::take)
    }
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            op,
            format!(
                "{}x{} vs {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        ));
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a trainable leaf.
    pub fn param(&mut self, value: Matrix) -> NodeId {
        self.push_unchecked(value, Op::Param, true)
    }

    /// Adds a leaf that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push_unchecked(value, Op::Constant, false)
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Name of the operation that produced `id`.
    pub fn op_name(&self, id: NodeId) -> &'static str {
        self.nodes[id.0].op.name()
    }

    pub fn parents(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes[id.0].op.parents()
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn push_unchecked(&mut self, value: Matrix, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Matrix, op: Op) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite(op.name()));
        }
        let requires_grad = op.parents().iter().any(|p| self.nodes[p.0].requires_grad);
        Ok(self.push_unchecked(value, op, requires_grad))
    }

    /// `a * b`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        self.push(v, Op::MatMul(a, b))
    }

    /// `a * b^T`.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.cols() {
            return Err(Error::dim(
                "matmul_nt",
                format!("{}x{} by ({}x{})^T", va.rows(), va.cols(), vb.rows(), vb.cols()),
            ));
        }
        let mut out = Matrix::zeros(va.rows(), vb.rows());
        gemm(va, false, vb, true, &mut out, 0.0);
        self.push(out, Op::MatMulNt(a, b))
    }

    /// Adds a `1 x C` row to every row of `x`.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (vx, vb) = (self.value(x), self.value(bias));
        if vb.rows() != 1 || vb.cols() != vx.cols() {
            return Err(Error::dim(
                "add_bias",
                format!("bias {}x{} for input with {} columns", vb.rows(), vb.cols(), vx.cols()),
            ));
        }
        let mut out = vx.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(vb.as_slice()) {
                *o += b;
            }
        }
        self.push(out, Op::AddBias(x, bias))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        same_shape("add", self.value(a), self.value(b))?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        same_shape("sub", self.value(a), self.value(b))?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        same_shape("mul", self.value(a), self.value(b))?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> Result<NodeId> {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    /// Max-subtracted softmax along `axis`.
    pub fn softmax(&mut self, a: NodeId, axis: Axis) -> Result<NodeId> {
        let v = softmax(self.value(a), axis);
        self.push(v, Op::Softmax(a, axis))
    }

    /// Time-delay context splicing with valid framing.
    ///
    /// Output row `t` concatenates input rows `t - min + o` for every offset
    /// `o`, so the output has `T - (max - min)` rows and `D * offsets.len()`
    /// columns.
    pub fn splice(&mut self, a: NodeId, offsets: &[isize]) -> Result<NodeId> {
        let x = self.value(a);
        let (lo, hi) = offset_span(offsets)?;
        let span = (hi - lo) as usize;
        if x.rows() <= span {
            return Err(Error::Input(format!(
                "{} frames cannot cover a context span of {}",
                x.rows(),
                span + 1
            )));
        }
        let t_out = x.rows() - span;
        let d = x.cols();
        let mut out = Matrix::zeros(t_out, d * offsets.len());
        for t in 0..t_out {
            let row = out.row_mut(t);
            for (j, &o) in offsets.iter().enumerate() {
                let src = (t as isize - lo + o) as usize;
                row[j * d..(j + 1) * d].copy_from_slice(x.row(src));
            }
        }
        self.push(out, Op::Splice(a, offsets.to_vec()))
    }

    /// Column sums as a `1 x C` row.
    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let x = self.value(a);
        let mut out = Matrix::zeros(1, x.cols());
        for r in 0..x.rows() {
            for (o, v) in out.as_mut_slice().iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        self.push(out, Op::SumRows(a))
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId> {
        let s = self.value(a).sum();
        self.push(Matrix::scalar(s), Op::SumAll(a))
    }

    /// Mean of all entries as a scalar node.
    pub fn mean_all(&mut self, a: NodeId) -> Result<NodeId> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(Error::Input("mean of an empty matrix".into()));
        }
        let s = self.sum_all(a)?;
        self.scale(s, 1.0 / n as f64)
    }

    /// Repeats each column `times` times in place: `T x K` becomes `T x K*times`.
    pub fn repeat_cols(&mut self, a: NodeId, times: usize) -> Result<NodeId> {
        let x = self.value(a);
        let k = x.cols();
        let mut out = Matrix::zeros(x.rows(), k * times);
        for r in 0..x.rows() {
            let src = x.row(r);
            let dst = out.row_mut(r);
            for (c, &v) in src.iter().enumerate() {
                dst[c * times..(c + 1) * times].fill(v);
            }
        }
        self.push(out, Op::RepeatCols(a, times))
    }

    /// `max(a, floor)`; entries below the floor pass no gradient.
    pub fn clamp_min(&mut self, a: NodeId, floor: f64) -> Result<NodeId> {
        let v = self.value(a).map(|x| x.max(floor));
        self.push(v, Op::ClampMin(a, floor))
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        let x = self.value(a);
        if x.as_slice().iter().any(|&v| v <= 0.0) {
            return Err(Error::NumericGuard("sqrt of a non-positive value".into()));
        }
        let v = x.map(f64::sqrt);
        self.push(v, Op::Sqrt(a))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Matrix::hcat(&mats)?;
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    /// Divides every row by its Euclidean norm.
    ///
    /// Fails with a numeric-guard error when a row has (near) zero norm.
    pub fn normalize_rows(&mut self, a: NodeId) -> Result<NodeId> {
        self.normalize_rows_impl(a, 0.0)
    }

    /// Divides every row by `sqrt(|row|^2 + eps)`; never fails on zero rows.
    pub fn normalize_rows_eps(&mut self, a: NodeId, eps: f64) -> Result<NodeId> {
        if eps <= 0.0 {
            return Err(Error::Contract("normalize_rows_eps needs eps > 0".into()));
        }
        self.normalize_rows_impl(a, eps)
    }

    fn normalize_rows_impl(&mut self, a: NodeId, eps: f64) -> Result<NodeId> {
        let x = self.value(a);
        let mut out = x.clone();
        for r in 0..x.rows() {
            let sq: f64 = x.row(r).iter().map(|v| v * v).sum();
            if eps == 0.0 && sq.sqrt() < ZERO_NORM {
                return Err(Error::NumericGuard(format!(
                    "row {r} has zero norm and cannot be length-normalized"
                )));
            }
            let n = (sq + eps).sqrt();
            out.row_mut(r).iter_mut().for_each(|v| *v /= n);
        }
        self.push(out, Op::NormalizeRows(a, eps))
    }

    /// Mean softmax cross-entropy of row logits against class `labels`.
    pub fn cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let x = self.value(logits);
        if labels.len() != x.rows() {
            return Err(Error::dim(
                "cross_entropy",
                format!("{} labels for {} rows", labels.len(), x.rows()),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= x.cols()) {
            return Err(Error::Input(format!(
                "label {bad} out of range for {} classes",
                x.cols()
            )));
        }
        let mut total = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = x.row(r);
            total += log_sum_exp(row) - row[y];
        }
        let n = labels.len().max(1) as f64;
        self.push(Matrix::scalar(total / n), Op::CrossEntropy(logits, labels.to_vec()))
    }

    /// Gradients of the scalar `root` with respect to every node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        if self.value(root).shape() != (1, 1) {
            let (r, c) = self.value(root).shape();
            return Err(Error::Contract(format!(
                "backward needs a scalar root, got {r}x{c}"
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Matrix::scalar(1.0));
        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn wants(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Matrix>], id: NodeId) -> &'g mut Matrix {
        let (r, c) = self.value(id).shape();
        grads[id.0].get_or_insert_with(|| Matrix::zeros(r, c))
    }

    fn accumulate(&self, grads: &mut [Option<Matrix>], id: NodeId, g: &Matrix) {
        if self.wants(id) {
            self.slot(grads, id).add_scaled(g, 1.0);
        }
    }

    fn propagate(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[i];
        let y = &node.value;
        match &node.op {
            Op::Param | Op::Constant => {}
            Op::MatMul(a, b) => {
                if self.wants(*a) {
                    let vb = self.value(*b);
                    gemm(g, false, vb, true, self.slot(grads, *a), 1.0);
                }
                if self.wants(*b) {
                    let va = self.value(*a);
                    gemm(va, true, g, false, self.slot(grads, *b), 1.0);
                }
            }
            Op::MatMulNt(a, b) => {
                if self.wants(*a) {
                    let vb = self.value(*b);
                    gemm(g, false, vb, false, self.slot(grads, *a), 1.0);
                }
                if self.wants(*b) {
                    let va = self.value(*a);
                    gemm(g, true, va, false, self.slot(grads, *b), 1.0);
                }
            }
            Op::AddBias(x, b) => {
                self.accumulate(grads, *x, g);
                if self.wants(*b) {
                    let db = self.slot(grads, *b);
                    for r in 0..g.rows() {
                        for (d, v) in db.as_mut_slice().iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g);
                self.accumulate(grads, *b, g);
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g);
                if self.wants(*b) {
                    self.slot(grads, *b).add_scaled(g, -1.0);
                }
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    let d = g.zip_map(self.value(*b), |g, v| g * v);
                    self.slot(grads, *a).add_scaled(&d, 1.0);
                }
                if self.wants(*b) {
                    let d = g.zip_map(self.value(*a), |g, v| g * v);
                    self.slot(grads, *b).add_scaled(&d, 1.0);
                }
            }
            Op::Scale(a, s) => {
                if self.wants(*a) {
                    self.slot(grads, *a).add_scaled(g, *s);
                }
            }
            Op::Relu(a) => {
                if self.wants(*a) {
                    let d = g.zip_map(y, |g, y| if y > 0.0 { g } else { 0.0 });
                    self.slot(grads, *a).add_scaled(&d, 1.0);
                }
            }
            Op::Sigmoid(a) => {
                if self.wants(*a) {
                    let d = g.zip_map(y, |g, y| g * y * (1.0 - y));
                    self.slot(grads, *a).add_scaled(&d, 1.0);
                }
            }
            Op::Softmax(a, axis) => {
                if self.wants(*a) {
                    let d = softmax_backward(y, g, *axis);
                    self.slot(grads, *a).add_scaled(&d, 1.0);
                }
            }
            Op::Splice(a, offsets) => {
                if self.wants(*a) {
                    let (lo, _) = offset_span(offsets).expect("validated at construction");
                    let dx = self.slot(grads, *a);
                    let d = dx.cols();
                    for t in 0..g.rows() {
                        let grow = g.row(t);
                        for (j, &o) in offsets.iter().enumerate() {
                            let dst = (t as isize - lo + o) as usize;
                            for (x, v) in dx.row_mut(dst).iter_mut().zip(&grow[j * d..(j + 1) * d]) {
                                *x += v;
                            }
                        }
                    }
                }
            }
            Op::SumRows(a) => {
                if self.wants(*a) {
                    let dx = self.slot(grads, *a);
                    for r in 0..dx.rows() {
                        for (x, v) in dx.row_mut(r).iter_mut().zip(g.as_slice()) {
                            *x += v;
                        }
                    }
                }
            }
            Op::SumAll(a) => {
                if self.wants(*a) {
                    let s = g.as_slice()[0];
                    self.slot(grads, *a).as_mut_slice().iter_mut().for_each(|x| *x += s);
                }
            }
            Op::RepeatCols(a, times) => {
                if self.wants(*a) {
                    let dx = self.slot(grads, *a);
                    for r in 0..g.rows() {
                        let grow = g.row(r);
                        for (c, x) in dx.row_mut(r).iter_mut().enumerate() {
                            *x += grow[c * times..(c + 1) * times].iter().sum::<f64>();
                        }
                    }
                }
            }
            Op::ClampMin(a, floor) => {
                if self.wants(*a) {
                    let d = g.zip_map(self.value(*a), |g, x| if x >= *floor { g } else { 0.0 });
                    self.slot(grads, *a).add_scaled(&d, 1.0);
                }
            }
            Op::Sqrt(a) => {
                if self.wants(*a) {
                    let d = g.zip_map(y, |g, y| g / (2.0 * y));
                    self.slot(grads, *a).add_scaled(&d, 1.0);
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    if self.wants(*p) {
                        let dx = self.slot(grads, *p);
                        for r in 0..g.rows() {
                            for (x, v) in dx.row_mut(r).iter_mut().zip(&g.row(r)[off..off + w]) {
                                *x += v;
                            }
                        }
                    }
                    off += w;
                }
            }
            Op::NormalizeRows(a, eps) => {
                if self.wants(*a) {
                    let x = self.value(*a);
                    let dx = self.slot(grads, *a);
                    for r in 0..x.rows() {
                        let n = (x.row(r).iter().map(|v| v * v).sum::<f64>() + eps).sqrt();
                        let (yr, gr) = (y.row(r), g.row(r));
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((d, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d += (gv - yv * dot) / n;
                        }
                    }
                }
            }
            Op::CrossEntropy(a, labels) => {
                if self.wants(*a) {
                    let x = self.value(*a);
                    let scale = g.as_slice()[0] / labels.len().max(1) as f64;
                    let p = softmax(x, Axis::Cols);
                    let dx = self.slot(grads, *a);
                    for (r, &lbl) in labels.iter().enumerate() {
                        for (c, d) in dx.row_mut(r).iter_mut().enumerate() {
                            let target = if c == lbl { 1.0 } else { 0.0 };
                            *d += scale * (p.get(r, c) - target);
                        }
                    }
                }
            }
        }
    }
}

/// Norm below which a vector is treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Max-subtracted softmax along `axis`.
pub fn softmax(x: &Matrix, axis: Axis) -> Matrix {
    let mut out = x.clone();
    match axis {
        Axis::Cols => {
            for r in 0..x.rows() {
                let row = out.row_mut(r);
                let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut s = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - m).exp();
                    s += *v;
                }
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Axis::Rows => {
            for c in 0..x.cols() {
                let m = (0..x.rows()).map(|r| x.get(r, c)).fold(f64::NEG_INFINITY, f64::max);
                let mut s = 0.0;
                for r in 0..x.rows() {
                    let e = (x.get(r, c) - m).exp();
                    out.set(r, c, e);
                    s += e;
                }
                for r in 0..x.rows() {
                    out.set(r, c, out.get(r, c) / s);
                }
            }
        }
    }
    out
}

fn softmax_backward(y: &Matrix, g: &Matrix, axis: Axis) -> Matrix {
    let mut d = Matrix::zeros(y.rows(), y.cols());
    match axis {
        Axis::Cols => {
            for r in 0..y.rows() {
                let dot: f64 = y.row(r).iter().zip(g.row(r)).map(|(a, b)| a * b).sum();
                for c in 0..y.cols() {
                    d.set(r, c, y.get(r, c) * (g.get(r, c) - dot));
                }
            }
        }
        Axis::Rows => {
            for c in 0..y.cols() {
                let dot: f64 = (0..y.rows()).map(|r| y.get(r, c) * g.get(r, c)).sum();
                for r in 0..y.rows() {
                    d.set(r, c, y.get(r, c) * (g.get(r, c) - dot));
                }
            }
        }
    }
    d
}

fn offset_span(offsets: &[isize]) -> Result<(isize, isize)> {
    let lo = offsets.iter().copied().min();
    let hi = offsets.iter().copied().max();
    match (lo, hi) {
        (Some(lo), Some(hi)) => Ok((lo, hi)),
        _ => Err(Error::Config("empty context offset list".into())),
    }
}
