//! Reverse-mode automatic differentiation over a dynamically built tape.
//!
//! Ops evaluate eagerly as they are appended, so node creation order is a
//! topological order and [`Graph::backward`] is a single reverse sweep.
//! Shape agreement between operands is a programming error and panics;
//! callers validate user-facing dimensions before building a graph.

use super::tensor::{Tensor, matmul_nn, matmul_nt, matmul_tn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    /// a[B x I] * w[O x I]^T
    MatMulNT(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// Broadcast a row vector over every row of a matrix.
    AddRow(NodeId, NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Scale(NodeId, f64),
    AddConst(NodeId),
    SliceCols(NodeId, usize, usize),
    ConcatCols(Vec<NodeId>),
    SumAll(NodeId),
    MeanAll(NodeId),
}

struct Node {
    op: Op,
    value: Tensor,
}

pub struct Graph {
    nodes: Vec<Node>,
}

pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn leaf(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Leaf, t)
    }

    pub fn matmul_nt(&mut self, a: NodeId, w: NodeId) -> NodeId {
        let (av, wv) = (self.value(a), self.value(w));
        assert_eq!(av.cols(), wv.cols(), "matmul_nt inner dimensions");
        let (b, o, k) = (av.rows(), wv.rows(), av.cols());
        let out = matmul_nt(av.data(), b, wv.data(), o, k);
        self.push(Op::MatMulNT(a, w), Tensor::from_raw(vec![b, o], out))
    }

    fn zip(&mut self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64, op: Op) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shape");
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = av.shape().to_vec();
        self.push(op, Tensor::from_raw(shape, data))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let (av, bv) = (self.value(a), self.value(bias));
        assert_eq!(av.cols(), bv.len(), "add_row width");
        let cols = av.cols();
        let data = av
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bv.data()[i % cols])
            .collect();
        let shape = av.shape().to_vec();
        self.push(Op::AddRow(a, bias), Tensor::from_raw(shape, data))
    }

    fn map(&mut self, a: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let av = self.value(a);
        let data = av.data().iter().map(|&x| f(x)).collect();
        let shape = av.shape().to_vec();
        self.push(op, Tensor::from_raw(shape, data))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.map(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.map(a, sigmoid_scalar, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.map(a, f64::exp, Op::Exp(a))
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        self.map(a, |x| k * x, Op::Scale(a, k))
    }

    pub fn add_const(&mut self, a: NodeId, k: f64) -> NodeId {
        self.map(a, |x| x + k, Op::AddConst(a))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let av = self.value(a);
        let (rows, cols) = (av.rows(), av.cols());
        assert!(start + len <= cols, "slice_cols out of range");
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&av.data()[r * cols + start..r * cols + start + len]);
        }
        self.push(
            Op::SliceCols(a, start, len),
            Tensor::from_raw(vec![rows, len], data),
        )
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat_cols needs at least one part");
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                let pv = self.value(p);
                assert_eq!(pv.rows(), rows, "concat_cols row count");
                data.extend_from_slice(pv.row_slice(r));
            }
        }
        self.push(
            Op::ConcatCols(parts.to_vec()),
            Tensor::from_raw(vec![rows, total], data),
        )
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().sum();
        self.push(Op::SumAll(a), Tensor::from_raw(vec![1], vec![s]))
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let av = self.value(a);
        let s = av.data().iter().sum::<f64>() / av.len() as f64;
        self.push(Op::MeanAll(a), Tensor::from_raw(vec![1], vec![s]))
    }

    /// Backpropagates from a scalar output node and returns per-node
    /// gradient buffers indexed like the tape.
    pub fn backward(&self, out: NodeId) -> Gradients {
        assert_eq!(self.value(out).len(), 1, "backward needs a scalar output");
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        grads[out.0][0] = 1.0;

        for idx in (0..self.nodes.len()).rev() {
            if grads[idx].iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = std::mem::take(&mut grads[idx]);
            match &self.nodes[idx].op {
                Op::Leaf => {
                    grads[idx] = g;
                    continue;
                }
                Op::MatMulNT(a, w) => {
                    let (av, wv) = (self.value(*a), self.value(*w));
                    let (b, o, k) = (av.rows(), wv.rows(), av.cols());
                    let da = matmul_nn(&g, b, wv.data(), k, o);
                    let dw = matmul_tn(&g, o, av.data(), k, b);
                    axpy(&mut grads[a.0], &da);
                    axpy(&mut grads[w.0], &dw);
                }
                Op::Add(a, b) => {
                    axpy(&mut grads[a.0], &g);
                    axpy(&mut grads[b.0], &g);
                }
                Op::Sub(a, b) => {
                    axpy(&mut grads[a.0], &g);
                    for (d, s) in grads[b.0].iter_mut().zip(&g) {
                        *d -= s;
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    for ((d, s), &y) in grads[a.0].iter_mut().zip(&g).zip(bv) {
                        *d += s * y;
                    }
                    for ((d, s), &x) in grads[b.0].iter_mut().zip(&g).zip(av) {
                        *d += s * x;
                    }
                }
                Op::AddRow(a, bias) => {
                    axpy(&mut grads[a.0], &g);
                    let cols = self.value(*bias).len();
                    for (i, s) in g.iter().enumerate() {
                        grads[bias.0][i % cols] += s;
                    }
                }
                Op::Relu(a) => {
                    let av = self.value(*a).data();
                    for ((d, s), &x) in grads[a.0].iter_mut().zip(&g).zip(av) {
                        if x > 0.0 {
                            *d += s;
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let yv = self.nodes[idx].value.data();
                    for ((d, s), &y) in grads[a.0].iter_mut().zip(&g).zip(yv) {
                        *d += s * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let yv = self.nodes[idx].value.data();
                    for ((d, s), &y) in grads[a.0].iter_mut().zip(&g).zip(yv) {
                        *d += s * (1.0 - y * y);
                    }
                }
                Op::Exp(a) => {
                    let yv = self.nodes[idx].value.data();
                    for ((d, s), &y) in grads[a.0].iter_mut().zip(&g).zip(yv) {
                        *d += s * y;
                    }
                }
                Op::Scale(a, k) => {
                    for (d, s) in grads[a.0].iter_mut().zip(&g) {
                        *d += k * s;
                    }
                }
                Op::AddConst(a) => {
                    axpy(&mut grads[a.0], &g);
                }
                Op::SliceCols(a, start, len) => {
                    let cols = self.value(*a).cols();
                    let rows = self.value(*a).rows();
                    for r in 0..rows {
                        for c in 0..*len {
                            grads[a.0][r * cols + start + c] += g[r * len + c];
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = self.nodes[idx].value.rows();
                    let total = self.nodes[idx].value.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        for r in 0..rows {
                            for c in 0..w {
                                grads[p.0][r * w + c] += g[r * total + offset + c];
                            }
                        }
                        offset += w;
                    }
                }
                Op::SumAll(a) => {
                    for d in grads[a.0].iter_mut() {
                        *d += g[0];
                    }
                }
                Op::MeanAll(a) => {
                    let n = self.value(*a).len() as f64;
                    for d in grads[a.0].iter_mut() {
                        *d += g[0] / n;
                    }
                }
            }
        }
        Gradients { buffers: grads }
    }
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

fn axpy(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Gradient buffers produced by [`Graph::backward`].
pub struct Gradients {
    buffers: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn wrt(&self, id: NodeId) -> &[f64] {
        &self.buffers[id.0]
    }
}
