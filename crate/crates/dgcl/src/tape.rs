//! Reverse-mode automatic differentiation over a Wengert tape.
//!
//! Every differentiable computation in the crate is expressed through
//! [`Tape`] methods. Each method validates shapes, computes the forward
//! value, and — when at least one input is tracked — records a node whose
//! id becomes the output tensor's tape handle. `backward` replays the node
//! list in reverse, accumulating gradients into a dense per-node map.
//!
//! A tape is built per training step and discarded. Untracked tensors act
//! as constants: the same methods double as plain (non-recorded) forward
//! evaluation when no input carries a node handle.

use std::rc::Rc;

use crate::error::TensorError;
use crate::sparse::CsrMatrix;
use crate::tensor::{NodeId, Tensor};

/// Saved input: optional tape link plus a snapshot of shape and data.
#[derive(Clone, Debug)]
struct Saved {
    node: Option<NodeId>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Saved {
    fn of(t: &Tensor) -> Self {
        Saved {
            node: t.node(),
            shape: t.shape().to_vec(),
            data: t.data().to_vec(),
        }
    }

    fn dims2(&self) -> (usize, usize) {
        (self.shape[0], self.shape[1])
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Matmul,
    Transpose,
    Add,
    Sub,
    Mul,
    AddScalar,
    Scale(f64),
    AddRowVec,
    MulRowVec,
    ScaleRows,
    Relu,
    Silu,
    Exp,
    Sqrt,
    Recip,
    Softplus,
    SoftmaxRows,
    LayerNorm { eps: f64 },
    GatherRows { ids: Vec<usize> },
    SliceCols { start: usize, len: usize },
    ConcatCols,
    RowDot,
    SumAll,
    MeanAll,
    LogSumExpRows,
    TakeDiag,
    SpmmSym(Rc<CsrMatrix>),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    inputs: Vec<Saved>,
    out_shape: Vec<usize>,
    out_data: Vec<f64>,
}

/// Gradients produced by [`Tape::backward`], keyed by node id.
#[derive(Debug)]
pub struct GradientMap {
    grads: Vec<Option<Tensor>>,
}

impl GradientMap {
    /// Gradient of the loss w.r.t. a tracked tensor, if one was produced.
    pub fn get(&self, t: &Tensor) -> Option<&Tensor> {
        t.node().and_then(|id| self.grads.get(id)?.as_ref())
    }

    pub fn get_id(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id)?.as_ref()
    }
}

/// Append-only operation recorder; single-owner, built per iteration.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a tracked copy of `t` as a leaf (gradient-receiving) node.
    pub fn leaf(&mut self, t: &Tensor) -> Tensor {
        let id = self.nodes.len();
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: vec![],
            out_shape: t.shape().to_vec(),
            out_data: t.data().to_vec(),
        });
        t.detach().with_node(id)
    }

    fn push(&mut self, op: Op, inputs: Vec<Saved>, out: Tensor) -> Tensor {
        if inputs.iter().any(|s| s.node.is_some()) {
            let id = self.nodes.len();
            self.nodes.push(Node {
                op,
                inputs,
                out_shape: out.shape().to_vec(),
                out_data: out.data().to_vec(),
            });
            out.with_node(id)
        } else {
            out
        }
    }

    // ── binary arithmetic ──────────────────────────────────────────────

    pub fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        let (m, k) = a.dims2()?;
        let (k2, n) = b.dims2()?;
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let out = Tensor::new(vec![m, n], matmul_raw(a.data(), b.data(), m, k, n))?;
        Ok(self.push(Op::Matmul, vec![Saved::of(a), Saved::of(b)], out))
    }

    pub fn transpose(&mut self, x: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = x.data()[i * n + j];
            }
        }
        let out = Tensor::new(vec![n, m], data)?;
        Ok(self.push(Op::Transpose, vec![Saved::of(x)], out))
    }

    pub fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_same_shape("add", Op::Add, a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_same_shape("sub", Op::Sub, a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_same_shape("mul", Op::Mul, a, b, |x, y| x * y)
    }

    fn zip_same_shape(
        &mut self,
        name: &'static str,
        op: Op,
        a: &Tensor,
        b: &Tensor,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        if a.shape() != b.shape() {
            return Err(TensorError::ShapeMismatch {
                op: name,
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let out = Tensor::new(a.shape().to_vec(), data)?;
        Ok(self.push(op, vec![Saved::of(a), Saved::of(b)], out))
    }

    // ── scalar / elementwise ───────────────────────────────────────────

    pub fn add_scalar(&mut self, x: &Tensor, c: f64) -> Tensor {
        let data = x.data().iter().map(|&v| v + c).collect();
        let out = Tensor::new(x.shape().to_vec(), data).expect("shape preserved");
        self.push(Op::AddScalar, vec![Saved::of(x)], out)
    }

    pub fn scale(&mut self, x: &Tensor, c: f64) -> Tensor {
        let data = x.data().iter().map(|&v| v * c).collect();
        let out = Tensor::new(x.shape().to_vec(), data).expect("shape preserved");
        self.push(Op::Scale(c), vec![Saved::of(x)], out)
    }

    pub fn relu(&mut self, x: &Tensor) -> Tensor {
        self.unary(Op::Relu, x, |v| v.max(0.0))
    }

    pub fn silu(&mut self, x: &Tensor) -> Tensor {
        self.unary(Op::Silu, x, |v| v / (1.0 + (-v).exp()))
    }

    pub fn exp(&mut self, x: &Tensor) -> Tensor {
        self.unary(Op::Exp, x, f64::exp)
    }

    pub fn sqrt(&mut self, x: &Tensor) -> Tensor {
        self.unary(Op::Sqrt, x, f64::sqrt)
    }

    pub fn recip(&mut self, x: &Tensor) -> Tensor {
        self.unary(Op::Recip, x, f64::recip)
    }

    /// Numerically stable log(1 + e^x).
    pub fn softplus(&mut self, x: &Tensor) -> Tensor {
        self.unary(Op::Softplus, x, |v| v.max(0.0) + (-v.abs()).exp().ln_1p())
    }

    fn unary(&mut self, op: Op, x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
        let data = x.data().iter().map(|&v| f(v)).collect();
        let out = Tensor::new(x.shape().to_vec(), data).expect("shape preserved");
        self.push(op, vec![Saved::of(x)], out)
    }

    // ── row-wise broadcasting ──────────────────────────────────────────

    /// x[i, j] + v[j]
    pub fn add_row_vec(&mut self, x: &Tensor, v: &Tensor) -> Result<Tensor, TensorError> {
        self.rowvec_op("add_row_vec", Op::AddRowVec, x, v, |a, b| a + b)
    }

    /// x[i, j] * v[j]
    pub fn mul_row_vec(&mut self, x: &Tensor, v: &Tensor) -> Result<Tensor, TensorError> {
        self.rowvec_op("mul_row_vec", Op::MulRowVec, x, v, |a, b| a * b)
    }

    fn rowvec_op(
        &mut self,
        name: &'static str,
        op: Op,
        x: &Tensor,
        v: &Tensor,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if v.shape() != [n] {
            return Err(TensorError::ShapeMismatch {
                op: name,
                lhs: x.shape().to_vec(),
                rhs: v.shape().to_vec(),
            });
        }
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                data.push(f(x.data()[i * n + j], v.data()[j]));
            }
        }
        let out = Tensor::new(vec![m, n], data)?;
        Ok(self.push(op, vec![Saved::of(x), Saved::of(v)], out))
    }

    /// Row i of x scaled by s[i].
    pub fn scale_rows(&mut self, x: &Tensor, s: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if s.shape() != [m] {
            return Err(TensorError::ShapeMismatch {
                op: "scale_rows",
                lhs: x.shape().to_vec(),
                rhs: s.shape().to_vec(),
            });
        }
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            let c = s.data()[i];
            for j in 0..n {
                data.push(x.data()[i * n + j] * c);
            }
        }
        let out = Tensor::new(vec![m, n], data)?;
        Ok(self.push(Op::ScaleRows, vec![Saved::of(x), Saved::of(s)], out))
    }

    // ── structured ops ─────────────────────────────────────────────────

    /// Row-wise softmax with per-row max subtraction.
    pub fn softmax_rows(&mut self, x: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { op: "softmax_rows" });
        }
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &x.data()[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..n {
                let e = (row[j] - max).exp();
                data[i * n + j] = e;
                sum += e;
            }
            for j in 0..n {
                data[i * n + j] /= sum;
            }
        }
        let out = Tensor::new(vec![m, n], data)?;
        Ok(self.push(Op::SoftmaxRows, vec![Saved::of(x)], out))
    }

    /// Per-row standardization followed by gain/bias, eps added to the variance.
    pub fn layer_norm(
        &mut self,
        x: &Tensor,
        gain: &Tensor,
        bias: &Tensor,
        eps: f64,
    ) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if n < 2 {
            return Err(TensorError::InvalidDim {
                op: "layer_norm",
                detail: format!("row length must be >= 2, got {n}"),
            });
        }
        if gain.shape() != [n] || bias.shape() != [n] {
            return Err(TensorError::ShapeMismatch {
                op: "layer_norm",
                lhs: x.shape().to_vec(),
                rhs: gain.shape().to_vec(),
            });
        }
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &x.data()[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for j in 0..n {
                let xhat = (row[j] - mean) * inv;
                data[i * n + j] = gain.data()[j] * xhat + bias.data()[j];
            }
        }
        let out = Tensor::new(vec![m, n], data)?;
        Ok(self.push(
            Op::LayerNorm { eps },
            vec![Saved::of(x), Saved::of(gain), Saved::of(bias)],
            out,
        ))
    }

    /// Output row i equals table[ids[i]]; backward scatter-adds into the table.
    pub fn gather_rows(&mut self, table: &Tensor, ids: &[usize]) -> Result<Tensor, TensorError> {
        let (rows, d) = table.dims2()?;
        for &id in ids {
            if id >= rows {
                return Err(TensorError::IndexOutOfRange { id, rows });
            }
        }
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            data.extend_from_slice(&table.data()[id * d..(id + 1) * d]);
        }
        let out = Tensor::new(vec![ids.len(), d], data)?;
        Ok(self.push(
            Op::GatherRows { ids: ids.to_vec() },
            vec![Saved::of(table)],
            out,
        ))
    }

    /// Columns [start, start+len) of x.
    pub fn slice_cols(
        &mut self,
        x: &Tensor,
        start: usize,
        len: usize,
    ) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if start + len > n {
            return Err(TensorError::InvalidDim {
                op: "slice_cols",
                detail: format!("slice {start}..{} exceeds {n} columns", start + len),
            });
        }
        let mut data = Vec::with_capacity(m * len);
        for i in 0..m {
            data.extend_from_slice(&x.data()[i * n + start..i * n + start + len]);
        }
        let out = Tensor::new(vec![m, len], data)?;
        Ok(self.push(Op::SliceCols { start, len }, vec![Saved::of(x)], out))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[&Tensor]) -> Result<Tensor, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::InvalidDim {
                op: "concat_cols",
                detail: "no inputs".into(),
            });
        }
        let (m, _) = parts[0].dims2()?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (mi, ni) = p.dims2()?;
            if mi != m {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: parts[0].shape().to_vec(),
                    rhs: p.shape().to_vec(),
                });
            }
            widths.push(ni);
        }
        let n: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for p in parts {
                let (_, ni) = p.dims2()?;
                data.extend_from_slice(&p.data()[i * ni..(i + 1) * ni]);
            }
        }
        let out = Tensor::new(vec![m, n], data)?;
        let inputs = parts.iter().map(|p| Saved::of(p)).collect();
        Ok(self.push(Op::ConcatCols, inputs, out))
    }

    /// Per-row inner product of equal-shape matrices: out[i] = <a[i,:], b[i,:]>.
    pub fn row_dot(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = a.dims2()?;
        if a.shape() != b.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "row_dot",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut data = Vec::with_capacity(m);
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..n {
                acc += a.data()[i * n + j] * b.data()[i * n + j];
            }
            data.push(acc);
        }
        let out = Tensor::new(vec![m], data)?;
        Ok(self.push(Op::RowDot, vec![Saved::of(a), Saved::of(b)], out))
    }

    pub fn sum_all(&mut self, x: &Tensor) -> Tensor {
        let out = Tensor::scalar(x.data().iter().sum());
        self.push(Op::SumAll, vec![Saved::of(x)], out)
    }

    pub fn mean_all(&mut self, x: &Tensor) -> Tensor {
        let n = x.numel().max(1) as f64;
        let out = Tensor::scalar(x.data().iter().sum::<f64>() / n);
        self.push(Op::MeanAll, vec![Saved::of(x)], out)
    }

    /// Stable per-row log-sum-exp: out[i] = log Σ_j exp(x[i, j]).
    pub fn log_sum_exp_rows(&mut self, x: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        let mut data = Vec::with_capacity(m);
        for i in 0..m {
            let row = &x.data()[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
            data.push(max + sum.ln());
        }
        let out = Tensor::new(vec![m], data)?;
        Ok(self.push(Op::LogSumExpRows, vec![Saved::of(x)], out))
    }

    /// Main diagonal of a square matrix.
    pub fn take_diag(&mut self, x: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if m != n {
            return Err(TensorError::InvalidDim {
                op: "take_diag",
                detail: format!("matrix must be square, got {m}x{n}"),
            });
        }
        let data: Vec<f64> = (0..n).map(|i| x.data()[i * n + i]).collect();
        let out = Tensor::new(vec![n], data)?;
        Ok(self.push(Op::TakeDiag, vec![Saved::of(x)], out))
    }

    /// Sparse-dense product A·x for a symmetric CSR matrix; the backward
    /// pass reuses A, which is only valid because A is symmetric.
    pub fn spmm_sym(&mut self, a: &Rc<CsrMatrix>, x: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = x.dims2()?;
        if m != a.n {
            return Err(TensorError::ShapeMismatch {
                op: "spmm_sym",
                lhs: vec![a.n, a.n],
                rhs: x.shape().to_vec(),
            });
        }
        let out = Tensor::new(vec![m, n], a.mul_dense(x.data(), n))?;
        Ok(self.push(Op::SpmmSym(Rc::clone(a)), vec![Saved::of(x)], out))
    }

    // ── backward ───────────────────────────────────────────────────────

    /// Reverse sweep from a tracked scalar loss. Gradients are produced for
    /// every tracked ancestor; untracked tensors receive none.
    pub fn backward(&self, loss: &Tensor) -> Result<GradientMap, TensorError> {
        let root = loss.node().ok_or(TensorError::UntrackedLoss)?;
        if loss.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: loss.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[root] = Some(vec![1.0]);

        for id in (0..=root).rev() {
            let Some(dy) = grads[id].take() else {
                continue;
            };
            let node = &self.nodes[id];
            let mut input_grads = self.node_backward(node, &dy);
            // accumulate into tracked inputs
            for (saved, g) in node.inputs.iter().zip(input_grads.drain(..)) {
                if let (Some(src), Some(g)) = (saved.node, g) {
                    match &mut grads[src] {
                        Some(acc) => {
                            for (a, b) in acc.iter_mut().zip(&g) {
                                *a += b;
                            }
                        }
                        None => grads[src] = Some(g),
                    }
                }
            }
            grads[id] = Some(dy);
        }

        let tensors = grads
            .into_iter()
            .enumerate()
            .map(|(id, g)| {
                g.map(|data| {
                    Tensor::new(self.nodes[id].out_shape.clone(), data)
                        .expect("gradient shape matches node output")
                })
            })
            .collect();
        Ok(GradientMap { grads: tensors })
    }

    /// Local gradients of one node w.r.t. each input (None where an input
    /// needs no gradient by construction).
    fn node_backward(&self, node: &Node, dy: &[f64]) -> Vec<Option<Vec<f64>>> {
        match &node.op {
            Op::Leaf => vec![],
            Op::Matmul => {
                let a = &node.inputs[0];
                let b = &node.inputs[1];
                let (m, k) = a.dims2();
                let (_, n) = b.dims2();
                // dA = dY · Bᵀ
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..n {
                        let g = dy[i * n + j];
                        for p in 0..k {
                            da[i * k + p] += g * b.data[p * n + j];
                        }
                    }
                }
                // dB = Aᵀ · dY
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    for p in 0..k {
                        let av = a.data[i * k + p];
                        for j in 0..n {
                            db[p * n + j] += av * dy[i * n + j];
                        }
                    }
                }
                vec![Some(da), Some(db)]
            }
            Op::Transpose => {
                let (m, n) = node.inputs[0].dims2();
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        dx[i * n + j] = dy[j * m + i];
                    }
                }
                vec![Some(dx)]
            }
            Op::Add => vec![Some(dy.to_vec()), Some(dy.to_vec())],
            Op::Sub => vec![Some(dy.to_vec()), Some(dy.iter().map(|v| -v).collect())],
            Op::Mul => {
                let a = &node.inputs[0].data;
                let b = &node.inputs[1].data;
                let da = dy.iter().zip(b).map(|(g, v)| g * v).collect();
                let db = dy.iter().zip(a).map(|(g, v)| g * v).collect();
                vec![Some(da), Some(db)]
            }
            Op::AddScalar => vec![Some(dy.to_vec())],
            Op::Scale(c) => vec![Some(dy.iter().map(|v| v * c).collect())],
            Op::AddRowVec => {
                let (m, n) = node.inputs[0].dims2();
                let mut dv = vec![0.0; n];
                for i in 0..m {
                    for j in 0..n {
                        dv[j] += dy[i * n + j];
                    }
                }
                vec![Some(dy.to_vec()), Some(dv)]
            }
            Op::MulRowVec => {
                let x = &node.inputs[0];
                let v = &node.inputs[1];
                let (m, n) = x.dims2();
                let mut dx = vec![0.0; m * n];
                let mut dv = vec![0.0; n];
                for i in 0..m {
                    for j in 0..n {
                        dx[i * n + j] = dy[i * n + j] * v.data[j];
                        dv[j] += dy[i * n + j] * x.data[i * n + j];
                    }
                }
                vec![Some(dx), Some(dv)]
            }
            Op::ScaleRows => {
                let x = &node.inputs[0];
                let s = &node.inputs[1];
                let (m, n) = x.dims2();
                let mut dx = vec![0.0; m * n];
                let mut ds = vec![0.0; m];
                for i in 0..m {
                    for j in 0..n {
                        dx[i * n + j] = dy[i * n + j] * s.data[i];
                        ds[i] += dy[i * n + j] * x.data[i * n + j];
                    }
                }
                vec![Some(dx), Some(ds)]
            }
            Op::Relu => {
                let x = &node.inputs[0].data;
                vec![Some(
                    dy.iter()
                        .zip(x)
                        .map(|(g, &v)| if v > 0.0 { *g } else { 0.0 })
                        .collect(),
                )]
            }
            Op::Silu => {
                let x = &node.inputs[0].data;
                vec![Some(
                    dy.iter()
                        .zip(x)
                        .map(|(g, &v)| {
                            let s = 1.0 / (1.0 + (-v).exp());
                            g * (s * (1.0 + v * (1.0 - s)))
                        })
                        .collect(),
                )]
            }
            Op::Exp => {
                let y = &node.out_data;
                vec![Some(dy.iter().zip(y).map(|(g, v)| g * v).collect())]
            }
            Op::Sqrt => {
                let y = &node.out_data;
                vec![Some(dy.iter().zip(y).map(|(g, v)| g / (2.0 * v)).collect())]
            }
            Op::Recip => {
                let y = &node.out_data;
                vec![Some(dy.iter().zip(y).map(|(g, v)| -g * v * v).collect())]
            }
            Op::Softplus => {
                let x = &node.inputs[0].data;
                vec![Some(
                    dy.iter()
                        .zip(x)
                        .map(|(g, &v)| g / (1.0 + (-v).exp()))
                        .collect(),
                )]
            }
            Op::SoftmaxRows => {
                let (m, n) = node.inputs[0].dims2();
                let y = &node.out_data;
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    let mut dot = 0.0;
                    for j in 0..n {
                        dot += dy[i * n + j] * y[i * n + j];
                    }
                    for j in 0..n {
                        dx[i * n + j] = y[i * n + j] * (dy[i * n + j] - dot);
                    }
                }
                vec![Some(dx)]
            }
            Op::LayerNorm { eps } => {
                let x = &node.inputs[0];
                let gain = &node.inputs[1].data;
                let (m, n) = x.dims2();
                let nf = n as f64;
                let mut dx = vec![0.0; m * n];
                let mut dg = vec![0.0; n];
                let mut db = vec![0.0; n];
                for i in 0..m {
                    let row = &x.data[i * n..(i + 1) * n];
                    let mean = row.iter().sum::<f64>() / nf;
                    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
                    let inv = 1.0 / (var + eps).sqrt();
                    let xhat: Vec<f64> = row.iter().map(|v| (v - mean) * inv).collect();
                    let dxhat: Vec<f64> = (0..n).map(|j| dy[i * n + j] * gain[j]).collect();
                    let mean_dxhat = dxhat.iter().sum::<f64>() / nf;
                    let mean_dxhat_xhat =
                        dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / nf;
                    for j in 0..n {
                        dg[j] += dy[i * n + j] * xhat[j];
                        db[j] += dy[i * n + j];
                        dx[i * n + j] =
                            inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                    }
                }
                vec![Some(dx), Some(dg), Some(db)]
            }
            Op::GatherRows { ids } => {
                let (rows, d) = node.inputs[0].dims2();
                let mut dt = vec![0.0; rows * d];
                for (i, &id) in ids.iter().enumerate() {
                    for j in 0..d {
                        dt[id * d + j] += dy[i * d + j];
                    }
                }
                vec![Some(dt)]
            }
            Op::SliceCols { start, len } => {
                let (m, n) = node.inputs[0].dims2();
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..*len {
                        dx[i * n + start + j] = dy[i * len + j];
                    }
                }
                vec![Some(dx)]
            }
            Op::ConcatCols => {
                let m = node.inputs[0].shape[0];
                let total: usize = node.inputs.iter().map(|s| s.shape[1]).sum();
                let mut outs = Vec::with_capacity(node.inputs.len());
                let mut offset = 0;
                for s in &node.inputs {
                    let w = s.shape[1];
                    let mut g = vec![0.0; m * w];
                    for i in 0..m {
                        g[i * w..(i + 1) * w]
                            .copy_from_slice(&dy[i * total + offset..i * total + offset + w]);
                    }
                    outs.push(Some(g));
                    offset += w;
                }
                outs
            }
            Op::RowDot => {
                let a = &node.inputs[0];
                let b = &node.inputs[1];
                let (m, n) = a.dims2();
                let mut da = vec![0.0; m * n];
                let mut db = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        da[i * n + j] = dy[i] * b.data[i * n + j];
                        db[i * n + j] = dy[i] * a.data[i * n + j];
                    }
                }
                vec![Some(da), Some(db)]
            }
            Op::SumAll => {
                let g = dy[0];
                vec![Some(vec![g; node.inputs[0].data.len()])]
            }
            Op::MeanAll => {
                let n = node.inputs[0].data.len().max(1) as f64;
                let g = dy[0] / n;
                vec![Some(vec![g; node.inputs[0].data.len()])]
            }
            Op::LogSumExpRows => {
                let x = &node.inputs[0];
                let (m, n) = x.dims2();
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    let lse = node.out_data[i];
                    for j in 0..n {
                        dx[i * n + j] = dy[i] * (x.data[i * n + j] - lse).exp();
                    }
                }
                vec![Some(dx)]
            }
            Op::TakeDiag => {
                let (m, n) = node.inputs[0].dims2();
                let mut dx = vec![0.0; m * n];
                for i in 0..n {
                    dx[i * n + i] = dy[i];
                }
                vec![Some(dx)]
            }
            Op::SpmmSym(a) => {
                let (_, n) = node.inputs[0].dims2();
                vec![Some(a.mul_dense(dy, n))]
            }
        }
    }
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
    c
}
