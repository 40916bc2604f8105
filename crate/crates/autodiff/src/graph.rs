//! Dynamic tape. Nodes are appended in evaluation order, so the creation
//! index is already a topological order and backward simply walks it in
//! reverse. Gradient accumulation therefore happens in a fixed order and
//! identical graphs give bit-identical gradients.

use std::borrow::Cow;

use crate::array::{matmul_raw, matmul_transpose_lhs, matmul_transpose_rhs, Array};
use crate::error::{AutodiffError, Result};

/// Log-probability reported for masked entries by [`Graph::masked_log_softmax`].
///
/// Masked entries take no part in normalization and receive no gradient; the
/// sentinel only has to be finite and exponentiate to exactly zero.
pub const MASKED_LOG_PROB: f64 = -1.0e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// `rhs` may be a `[1, n]` row broadcast over the rows of `lhs`.
    Add {
        lhs: NodeId,
        rhs: NodeId,
        broadcast: bool,
    },
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Concat {
        inputs: Vec<NodeId>,
        axis: usize,
    },
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    /// `None` averages everything into a scalar, `Some(0)` averages rows.
    Mean(NodeId, Option<usize>),
    Sum(NodeId),
    Gather {
        input: NodeId,
        rows: Vec<usize>,
    },
    RowSlice {
        input: NodeId,
        start: usize,
    },
    Reshape(NodeId),
    Element {
        input: NodeId,
        index: usize,
    },
    MaskedLogSoftmax {
        input: NodeId,
        mask: Vec<bool>,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add { .. } => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Concat { .. } => "concat",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Relu(_) => "relu",
            Op::Mean(..) => "mean",
            Op::Sum(_) => "sum",
            Op::Gather { .. } => "gather",
            Op::RowSlice { .. } => "row_slice",
            Op::Reshape(_) => "reshape",
            Op::Element { .. } => "element",
            Op::MaskedLogSoftmax { .. } => "masked_log_softmax",
        }
    }
}

#[derive(Debug)]
struct Node<'p> {
    value: Cow<'p, Array>,
    op: Op,
    requires_grad: bool,
}

/// A reverse-mode tape. Parameters are borrowed for the lifetime `'p`, so a
/// graph never copies weight matrices.
#[derive(Debug, Default)]
pub struct Graph<'p> {
    nodes: Vec<Node<'p>>,
}

/// Gradients produced by [`Graph::backward`], indexed by node.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Array>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `node`. Nodes the loss does not
    /// depend on get an all-zero array of the node's shape.
    pub fn get(&self, node: NodeId) -> Array {
        match &self.grads[node.0] {
            Some(g) => g.clone(),
            None => Array::zeros(&self.shapes[node.0]),
        }
    }

    pub fn take(&mut self, node: NodeId) -> Array {
        match self.grads[node.0].take() {
            Some(g) => g,
            None => Array::zeros(&self.shapes[node.0]),
        }
    }
}

fn check_finite(op: &'static str, a: &Array) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(AutodiffError::NonFinite { op })
    }
}

fn require_rank2(op: &'static str, a: &Array) -> Result<()> {
    if a.shape().len() == 2 {
        Ok(())
    } else {
        Err(AutodiffError::InvalidShape {
            shape: a.shape().to_vec(),
            reason: format!("{op} expects a rank-2 array"),
        })
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Graph<'p> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Array {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Cow<'p, Array>, op: Op, requires_grad: bool) -> Result<NodeId> {
        check_finite(op.name(), &value)?;
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn push_owned(&mut self, value: Array, op: Op, parents: &[NodeId]) -> Result<NodeId> {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.push(Cow::Owned(value), op, requires_grad)
    }

    /// Borrowed trainable leaf.
    pub fn param(&mut self, value: &'p Array) -> Result<NodeId> {
        self.push(Cow::Borrowed(value), Op::Leaf, true)
    }

    /// Owned trainable leaf (used by gradient checks and tests).
    pub fn variable(&mut self, value: Array) -> Result<NodeId> {
        self.push(Cow::Owned(value), Op::Leaf, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Array) -> Result<NodeId> {
        self.push(Cow::Owned(value), Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        require_rank2("matmul", av)?;
        require_rank2("matmul", bv)?;
        if av.cols() != bv.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let out = matmul_raw(av, bv);
        self.push_owned(out, Op::MatMul(a, b), &[a, b])
    }

    /// Elementwise sum. `b` may also be a `[1, n]` row added to every row of `a`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        let broadcast = if av.same_shape(bv) {
            false
        } else if av.shape().len() == 2 && bv.shape() == [1, av.cols()] {
            true
        } else {
            return Err(AutodiffError::ShapeMismatch {
                op: "add",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        };
        let mut out = av.clone();
        if broadcast {
            let c = av.cols();
            let row = bv.data();
            for chunk in out.data_mut().chunks_mut(c) {
                for (o, r) in chunk.iter_mut().zip(row) {
                    *o += r;
                }
            }
        } else {
            out.add_assign(bv);
        }
        self.push_owned(
            out,
            Op::Add {
                lhs: a,
                rhs: b,
                broadcast,
            },
            &[a, b],
        )
    }

    fn elementwise(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Array> {
        let (av, bv) = (self.value(a), self.value(b));
        if !av.same_shape(bv) {
            return Err(AutodiffError::ShapeMismatch {
                op: op_name,
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Array::new(av.shape().to_vec(), data)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.elementwise("sub", a, b, |x, y| x - y)?;
        self.push_owned(out, Op::Sub(a, b), &[a, b])
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.elementwise("mul", a, b, |x, y| x * y)?;
        self.push_owned(out, Op::Mul(a, b), &[a, b])
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let out = self.value(a).map(|v| v * factor);
        self.push_owned(out, Op::Scale(a, factor), &[a])
    }

    /// Concatenate rank-2 arrays along `axis` (0 stacks rows, 1 joins columns).
    pub fn concat(&mut self, inputs: &[NodeId], axis: usize) -> Result<NodeId> {
        if inputs.is_empty() || axis > 1 {
            return Err(AutodiffError::InvalidShape {
                shape: vec![],
                reason: format!("concat of {} inputs along axis {axis}", inputs.len()),
            });
        }
        let first = self.value(inputs[0]);
        require_rank2("concat", first)?;
        let (rows0, cols0) = (first.rows(), first.cols());
        for &id in &inputs[1..] {
            let v = self.value(id);
            require_rank2("concat", v)?;
            let compatible = if axis == 0 { v.cols() == cols0 } else { v.rows() == rows0 };
            if !compatible {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat",
                    left: first.shape().to_vec(),
                    right: v.shape().to_vec(),
                });
            }
        }
        let out = if axis == 0 {
            let rows: usize = inputs.iter().map(|&id| self.value(id).rows()).sum();
            let mut data = Vec::with_capacity(rows * cols0);
            for &id in inputs {
                data.extend_from_slice(self.value(id).data());
            }
            Array::matrix(rows, cols0, data)?
        } else {
            let cols: usize = inputs.iter().map(|&id| self.value(id).cols()).sum();
            let mut data = Vec::with_capacity(rows0 * cols);
            for r in 0..rows0 {
                for &id in inputs {
                    data.extend_from_slice(self.value(id).row_slice(r));
                }
            }
            Array::matrix(rows0, cols, data)?
        };
        self.push_owned(
            out,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            inputs,
        )
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let out = self.value(a).map(f64::tanh);
        self.push_owned(out, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let out = self.value(a).map(sigmoid);
        self.push_owned(out, Op::Sigmoid(a), &[a])
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let out = self.value(a).map(|v| v.max(0.0));
        self.push_owned(out, Op::Relu(a), &[a])
    }

    /// Mean of every entry, as a `[1, 1]` scalar.
    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a);
        let out = Array::scalar(v.sum() / v.len() as f64);
        self.push_owned(out, Op::Mean(a, None), &[a])
    }

    /// Column-wise mean over rows: `[m, n] -> [1, n]`.
    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a);
        require_rank2("mean", v)?;
        let (m, n) = (v.rows(), v.cols());
        let mut acc = vec![0.0; n];
        for r in 0..m {
            for (o, x) in acc.iter_mut().zip(v.row_slice(r)) {
                *o += x;
            }
        }
        let inv = 1.0 / m as f64;
        let out = Array::row(acc.into_iter().map(|s| s * inv).collect());
        self.push_owned(out, Op::Mean(a, Some(0)), &[a])
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let out = Array::scalar(self.value(a).sum());
        self.push_owned(out, Op::Sum(a), &[a])
    }

    /// Row selection; rows may repeat.
    pub fn gather(&mut self, a: NodeId, rows: &[usize]) -> Result<NodeId> {
        let v = self.value(a);
        require_rank2("gather", v)?;
        let c = v.cols();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            if r >= v.rows() {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "gather",
                    index: r,
                    len: v.rows(),
                });
            }
            data.extend_from_slice(v.row_slice(r));
        }
        let out = Array::matrix(rows.len(), c, data)?;
        self.push_owned(
            out,
            Op::Gather {
                input: a,
                rows: rows.to_vec(),
            },
            &[a],
        )
    }

    /// Contiguous block of rows `start..end`.
    pub fn row_slice(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let v = self.value(a);
        require_rank2("row_slice", v)?;
        if start >= end || end > v.rows() {
            return Err(AutodiffError::IndexOutOfRange {
                op: "row_slice",
                index: end,
                len: v.rows(),
            });
        }
        let c = v.cols();
        let out = Array::matrix(end - start, c, v.data()[start * c..end * c].to_vec())?;
        self.push_owned(out, Op::RowSlice { input: a, start }, &[a])
    }

    /// Same data, new shape of equal size.
    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let out = Array::new(shape.to_vec(), self.value(a).data().to_vec())?;
        self.push_owned(out, Op::Reshape(a), &[a])
    }

    /// Single entry at row-major position `index`, as a scalar.
    pub fn element(&mut self, a: NodeId, index: usize) -> Result<NodeId> {
        let v = self.value(a);
        if index >= v.len() {
            return Err(AutodiffError::IndexOutOfRange {
                op: "element",
                index,
                len: v.len(),
            });
        }
        let out = Array::scalar(v.data()[index]);
        self.push_owned(out, Op::Element { input: a, index }, &[a])
    }

    /// Log-softmax over the unmasked entries of `logits` (treated as flat).
    /// Masked entries are excluded from the normalizer and report
    /// [`MASKED_LOG_PROB`].
    pub fn masked_log_softmax(&mut self, logits: NodeId, mask: &[bool]) -> Result<NodeId> {
        let v = self.value(logits);
        if mask.len() != v.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "masked_log_softmax",
                left: v.shape().to_vec(),
                right: vec![mask.len()],
            });
        }
        let max = v
            .data()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&x, _)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(AutodiffError::AllMasked {
                op: "masked_log_softmax",
            });
        }
        let sum_exp: f64 = v
            .data()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&x, _)| (x - max).exp())
            .sum();
        let log_norm = max + sum_exp.ln();
        let data = v
            .data()
            .iter()
            .zip(mask)
            .map(|(&x, &m)| if m { x - log_norm } else { MASKED_LOG_PROB })
            .collect();
        let out = Array::new(v.shape().to_vec(), data)?;
        self.push_owned(
            out,
            Op::MaskedLogSoftmax {
                input: logits,
                mask: mask.to_vec(),
            },
            &[logits],
        )
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(AutodiffError::NonScalarLoss {
                shape: loss_value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Array>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Array::filled(loss_value.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            check_finite("backward", &g)?;
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn propagate(&self, node: &Node<'p>, g: &Array, grads: &mut [Option<Array>]) {
        if !node.requires_grad {
            return;
        }
        let needs = |id: NodeId| self.nodes[id.0].requires_grad;
        let accumulate = |grads: &mut [Option<Array>], id: NodeId, contribution: Array| {
            match &mut grads[id.0] {
                Some(existing) => existing.add_assign(&contribution),
                slot @ None => *slot = Some(contribution),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if needs(*a) {
                    accumulate(grads, *a, matmul_transpose_rhs(g, self.value(*b)));
                }
                if needs(*b) {
                    accumulate(grads, *b, matmul_transpose_lhs(self.value(*a), g));
                }
            }
            Op::Add {
                lhs,
                rhs,
                broadcast,
            } => {
                if needs(*lhs) {
                    accumulate(grads, *lhs, g.clone());
                }
                if needs(*rhs) {
                    if *broadcast {
                        let c = g.cols();
                        let mut acc = vec![0.0; c];
                        for r in 0..g.rows() {
                            for (o, x) in acc.iter_mut().zip(g.row_slice(r)) {
                                *o += x;
                            }
                        }
                        accumulate(grads, *rhs, Array::row(acc));
                    } else {
                        accumulate(grads, *rhs, g.clone());
                    }
                }
            }
            Op::Sub(a, b) => {
                if needs(*a) {
                    accumulate(grads, *a, g.clone());
                }
                if needs(*b) {
                    accumulate(grads, *b, g.map(|v| -v));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if needs(*a) {
                    accumulate(grads, *a, zip_with(g, bv, |x, y| x * y));
                }
                if needs(*b) {
                    accumulate(grads, *b, zip_with(g, av, |x, y| x * y));
                }
            }
            Op::Scale(a, factor) => {
                if needs(*a) {
                    let f = *factor;
                    accumulate(grads, *a, g.map(|v| v * f));
                }
            }
            Op::Concat { inputs, axis } => {
                if *axis == 0 {
                    let c = g.cols();
                    let mut offset = 0;
                    for &id in inputs {
                        let rows = self.value(id).rows();
                        if needs(id) {
                            let part = g.data()[offset * c..(offset + rows) * c].to_vec();
                            accumulate(grads, id, Array::matrix(rows, c, part).expect("shape"));
                        }
                        offset += rows;
                    }
                } else {
                    let mut offset = 0;
                    for &id in inputs {
                        let v = self.value(id);
                        let (rows, cols) = (v.rows(), v.cols());
                        if needs(id) {
                            let mut part = Vec::with_capacity(rows * cols);
                            for r in 0..rows {
                                part.extend_from_slice(&g.row_slice(r)[offset..offset + cols]);
                            }
                            accumulate(grads, id, Array::matrix(rows, cols, part).expect("shape"));
                        }
                        offset += cols;
                    }
                }
            }
            Op::Tanh(a) => {
                if needs(*a) {
                    accumulate(grads, *a, zip_with(g, &node.value, |gv, y| gv * (1.0 - y * y)));
                }
            }
            Op::Sigmoid(a) => {
                if needs(*a) {
                    accumulate(grads, *a, zip_with(g, &node.value, |gv, y| gv * y * (1.0 - y)));
                }
            }
            Op::Relu(a) => {
                if needs(*a) {
                    let x = self.value(*a);
                    accumulate(grads, *a, zip_with(g, x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
                }
            }
            Op::Mean(a, axis) => {
                if needs(*a) {
                    let x = self.value(*a);
                    let contribution = match axis {
                        None => Array::filled(x.shape(), g.item() / x.len() as f64),
                        Some(_) => {
                            let inv = 1.0 / x.rows() as f64;
                            let row: Vec<f64> = g.data().iter().map(|v| v * inv).collect();
                            let mut data = Vec::with_capacity(x.len());
                            for _ in 0..x.rows() {
                                data.extend_from_slice(&row);
                            }
                            Array::new(x.shape().to_vec(), data).expect("shape")
                        }
                    };
                    accumulate(grads, *a, contribution);
                }
            }
            Op::Sum(a) => {
                if needs(*a) {
                    accumulate(grads, *a, Array::filled(self.value(*a).shape(), g.item()));
                }
            }
            Op::Gather { input, rows } => {
                if needs(*input) {
                    let x = self.value(*input);
                    let c = x.cols();
                    let mut acc = Array::zeros(x.shape());
                    for (k, &r) in rows.iter().enumerate() {
                        let dst = &mut acc.data_mut()[r * c..(r + 1) * c];
                        for (o, v) in dst.iter_mut().zip(g.row_slice(k)) {
                            *o += v;
                        }
                    }
                    accumulate(grads, *input, acc);
                }
            }
            Op::RowSlice { input, start } => {
                if needs(*input) {
                    let x = self.value(*input);
                    let c = x.cols();
                    let mut acc = Array::zeros(x.shape());
                    acc.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                    accumulate(grads, *input, acc);
                }
            }
            Op::Reshape(a) => {
                if needs(*a) {
                    let shape = self.value(*a).shape().to_vec();
                    accumulate(grads, *a, Array::new(shape, g.data().to_vec()).expect("shape"));
                }
            }
            Op::Element { input, index } => {
                if needs(*input) {
                    let mut acc = Array::zeros(self.value(*input).shape());
                    acc.data_mut()[*index] = g.item();
                    accumulate(grads, *input, acc);
                }
            }
            Op::MaskedLogSoftmax { input, mask } => {
                if needs(*input) {
                    let y = &node.value;
                    let g_sum: f64 = g
                        .data()
                        .iter()
                        .zip(mask)
                        .filter(|(_, &m)| m)
                        .map(|(v, _)| v)
                        .sum();
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .zip(mask)
                        .map(|((&gv, &yv), &m)| if m { gv - yv.exp() * g_sum } else { 0.0 })
                        .collect();
                    accumulate(grads, *input, Array::new(y.shape().to_vec(), data).expect("shape"));
                }
            }
        }
    }
}

fn zip_with(a: &Array, b: &Array, f: impl Fn(f64, f64) -> f64) -> Array {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Array::new(a.shape().to_vec(), data).expect("shapes checked at construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_log_softmax_symmetric_pair() {
        let mut g = Graph::new();
        let x = g.constant(Array::row(vec![0.0, 0.0])).unwrap();
        let y = g.masked_log_softmax(x, &[true, true]).unwrap();
        for &v in g.value(y).data() {
            assert!((v - 0.5f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn masked_log_softmax_single_feasible_entry() {
        let mut g = Graph::new();
        let x = g.constant(Array::row(vec![5.0, -2.0])).unwrap();
        let y = g.masked_log_softmax(x, &[true, false]).unwrap();
        let probs: Vec<f64> = g.value(y).data().iter().map(|v| v.exp()).collect();
        assert_eq!(probs, vec![1.0, 0.0]);
    }

    #[test]
    fn softmax_of_one_two_three() {
        // Oracle: exp-normalize evaluated directly.
        let e: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).collect();
        let z: f64 = e.iter().sum();
        let oracle: Vec<f64> = e.iter().map(|v| v / z).collect();
        let frozen = [0.09003, 0.24473, 0.66524];
        for (o, f) in oracle.iter().zip(frozen) {
            assert!((o - f).abs() < 1e-5);
        }

        let mut g = Graph::new();
        let x = g.constant(Array::row(vec![1.0, 2.0, 3.0])).unwrap();
        let y = g.masked_log_softmax(x, &[true; 3]).unwrap();
        for (v, f) in g.value(y).data().iter().zip(frozen) {
            assert!((v.exp() - f).abs() < 1e-5);
        }
    }

    #[test]
    fn all_masked_is_an_error() {
        let mut g = Graph::new();
        let x = g.constant(Array::row(vec![1.0, 2.0])).unwrap();
        assert_eq!(
            g.masked_log_softmax(x, &[false, false]),
            Err(AutodiffError::AllMasked {
                op: "masked_log_softmax"
            })
        );
    }

    #[test]
    fn non_finite_results_raise() {
        let mut g = Graph::new();
        let x = g.constant(Array::row(vec![1e300])).unwrap();
        assert!(matches!(
            g.scale(x, 1e300),
            Err(AutodiffError::NonFinite { op: "scale" })
        ));
        assert!(g.constant(Array::row(vec![f64::NAN])).is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut g = Graph::new();
        let a = g.constant(Array::zeros(&[2, 3])).unwrap();
        let b = g.constant(Array::zeros(&[2, 3])).unwrap();
        assert!(matches!(g.matmul(a, b), Err(AutodiffError::ShapeMismatch { .. })));
        let c = g.constant(Array::zeros(&[1, 2])).unwrap();
        assert!(g.add(a, c).is_err());
        assert!(g.mul(a, c).is_err());
    }

    #[test]
    fn linear_map_gradient_is_input_per_row() {
        // loss = sum(x · W) with x [1,3], W [3,2]; dloss/dW[i][j] = x[i].
        let w = Array::matrix(3, 2, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]).unwrap();
        let mut g = Graph::new();
        let x = g.constant(Array::row(vec![1.0, 2.0, 3.0])).unwrap();
        let wn = g.param(&w).unwrap();
        let y = g.matmul(x, wn).unwrap();
        let loss = g.sum(y).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(wn).data(), &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn independent_parameter_gets_zero_gradient() {
        let p = Array::row(vec![1.0, 2.0]);
        let q = Array::row(vec![3.0, 4.0]);
        let mut g = Graph::new();
        let pn = g.param(&p).unwrap();
        let qn = g.param(&q).unwrap();
        let loss = g.sum(pn).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(qn), Array::zeros(&[1, 2]));
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let p = g.variable(Array::row(vec![1.0, 2.0])).unwrap();
        assert!(matches!(
            g.backward(p),
            Err(AutodiffError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(Array::row(vec![1.0, 2.0])).unwrap();
        let v = g.variable(Array::row(vec![3.0, 4.0])).unwrap();
        let m = g.mul(c, v).unwrap();
        let loss = g.sum(m).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(c), Array::zeros(&[1, 2]));
        assert_eq!(grads.get(v).data(), &[1.0, 2.0]);
    }
}
