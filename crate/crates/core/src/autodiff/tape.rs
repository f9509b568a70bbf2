//! Eager tensor operations recorded on a tape for reverse-mode
//! differentiation.
//!
//! Every operation computes its value immediately, so callers can read
//! intermediate values (for example to rank candidates) while the graph is
//! still being built. Shapes must match exactly; the only implicit broadcast
//! is multiplication by a scalar. Row-bias addition is its own primitive.

use super::params::{GradStore, ParamId, ParamStore};
use super::tensor::axis_split;
use super::{Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Constant,
    Param(ParamId),
    Lookup { param: ParamId, indices: Vec<usize> },
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    ScalarMul { tensor: Var, scalar: Var },
    Scale(Var, f64),
    AddBias(Var, Var),
    Concat { inputs: Vec<Var>, axis: usize },
    Slice { input: Var, axis: usize, start: usize },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax { input: Var, axis: usize },
    LogSoftmax { input: Var, axis: usize },
    Sum(Var),
    Dropout { input: Var, mask: Tensor },
    GatherRows { input: Var, indices: Vec<usize> },
    SegmentMax { input: Var, argmax: Vec<usize> },
    Transpose(Var),
    Reshape(Var),
    Pick { input: Var, cols: Vec<usize> },
}

struct Node {
    // `None` for parameter nodes, whose value lives in the store.
    value: Option<Tensor>,
    op: Op,
    requires_grad: bool,
}

/// Per-node gradients produced by [`Tape::backward`]. Only leaf nodes
/// (inputs, parameters and embedding lookups) keep their gradient.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

/// Operation record. Parameters are read from the borrowed store.
pub struct Tape<'p> {
    params: Option<&'p ParamStore>,
    nodes: Vec<Node>,
    grad_enabled: bool,
    consumed: bool,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p> Tape<'p> {
    /// A recording tape without parameters (inputs and constants only).
    pub fn new() -> Self {
        Tape {
            params: None,
            nodes: Vec::new(),
            grad_enabled: true,
            consumed: false,
        }
    }

    pub fn with_params(params: &'p ParamStore) -> Self {
        Tape {
            params: Some(params),
            ..Self::new()
        }
    }

    /// A tape that computes values only; `backward` fails with `NoTape`.
    pub fn inference(params: &'p ParamStore) -> Self {
        Tape {
            params: Some(params),
            grad_enabled: false,
            ..Self::new()
        }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Clears all records so the tape can be reused.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.store().get(*id),
            (None, _) => unreachable!("node without value"),
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn store(&self) -> &'p ParamStore {
        self.params.expect("tape has no parameter store")
    }

    fn push(&mut self, value: Option<Tensor>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad: requires_grad && self.grad_enabled,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn push_op(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let rg = self.needs(inputs);
        self.push(Some(value), op, rg)
    }

    /// A differentiable leaf.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Some(value), Op::Input, true)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Some(value), Op::Constant, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let _ = self.store().get(id);
        self.push(None, Op::Param(id), true)
    }

    /// Embedding lookup: rows `indices` of a matrix parameter. Its gradient
    /// is scattered back into the parameter's rows.
    pub fn lookup(&mut self, id: ParamId, indices: &[usize]) -> Result<Var, TensorError> {
        let table = self.store().get(id);
        let value = gather_rows(table, indices, "lookup")?;
        Ok(self.push(
            Some(value),
            Op::Lookup {
                param: id,
                indices: indices.to_vec(),
            },
            true,
        ))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows() {
            return Err(mismatch("matmul", av, bv));
        }
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![0.0; m * n];
        matmul_into(av.data(), bv.data(), &mut out, m, k, n);
        Ok(self.push_op(Tensor::matrix(m, n, out), Op::MatMul(a, b), &[a, b]))
    }

    fn zip_same(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch(name, av, bv));
        }
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(av.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same(a, b, "add", |x, y| x + y)?;
        Ok(self.push_op(t, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same(a, b, "sub", |x, y| x - y)?;
        Ok(self.push_op(t, Op::Sub(a, b), &[a, b]))
    }

    /// Pointwise product. One operand may be a scalar (shape `[]`).
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (a_scalar, b_scalar) = (self.value(a).is_scalar(), self.value(b).is_scalar());
        if b_scalar && !a_scalar || a_scalar && !b_scalar {
            let (tensor, scalar) = if b_scalar { (a, b) } else { (b, a) };
            let s = self.value(scalar).item();
            let tv = self.value(tensor);
            let t = Tensor::new(tv.shape().to_vec(), tv.data().iter().map(|x| x * s).collect())?;
            return Ok(self.push_op(t, Op::ScalarMul { tensor, scalar }, &[tensor, scalar]));
        }
        let t = self.zip_same(a, b, "mul", |x, y| x * y)?;
        Ok(self.push_op(t, Op::Mul(a, b), &[a, b]))
    }

    /// Multiplication by a fixed constant.
    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let av = self.value(a);
        let t = Tensor::new(av.shape().to_vec(), av.data().iter().map(|x| x * c).collect()).expect("same shape");
        self.push_op(t, Op::Scale(a, c), &[a])
    }

    /// Adds a bias vector (shape `[n]` or `[1, n]`) to every row of an `m × n` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let (xv, bv) = (self.value(x), self.value(bias));
        let n = bv.numel();
        let ok_bias = bv.ndim() == 1 || (bv.ndim() == 2 && bv.rows() == 1);
        if xv.ndim() != 2 || !ok_bias || xv.cols() != n {
            return Err(mismatch("add_bias", xv, bv));
        }
        let mut data = xv.data().to_vec();
        for row in data.chunks_mut(n) {
            for (a, b) in row.iter_mut().zip(bv.data()) {
                *a += b;
            }
        }
        let t = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push_op(t, Op::AddBias(x, bias), &[x, bias]))
    }

    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = self.value(
            *inputs
                .first()
                .ok_or(TensorError::BadArgument("concat of nothing".into()))?,
        );
        if axis >= first.ndim() {
            return Err(TensorError::BadArgument(format!("concat axis {axis} out of range")));
        }
        let mut out_shape = first.shape().to_vec();
        out_shape[axis] = 0;
        for &v in inputs {
            let s = self.value(v).shape();
            let compatible = s.len() == out_shape.len()
                && s.iter()
                    .zip(first.shape())
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(mismatch("concat", first, self.value(v)));
            }
            out_shape[axis] += s[axis];
        }
        let (outer, _, inner) = axis_split(&out_shape, axis);
        let mut data = Vec::with_capacity(out_shape.iter().product());
        for o in 0..outer {
            for &v in inputs {
                let t = self.value(v);
                let chunk = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let t = Tensor::new(out_shape, data)?;
        Ok(self.push_op(
            t,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            inputs,
        ))
    }

    /// `len` entries starting at `start` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if axis >= xv.ndim() || start + len > xv.shape()[axis] || len == 0 {
            return Err(TensorError::BadArgument(format!(
                "slice [{start}, {}) on axis {axis} of shape {:?}",
                start + len,
                xv.shape()
            )));
        }
        let (outer, full, inner) = axis_split(xv.shape(), axis);
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * full * inner + start * inner;
            data.extend_from_slice(&xv.data()[base..base + len * inner]);
        }
        let mut shape = xv.shape().to_vec();
        shape[axis] = len;
        let t = Tensor::new(shape, data)?;
        Ok(self.push_op(t, Op::Slice { input: x, axis, start }, &[x]))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let xv = self.value(x);
        Tensor::new(xv.shape().to_vec(), xv.data().iter().map(|&v| f(v)).collect()).expect("same shape")
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let t = self.map(x, sigmoid);
        self.push_op(t, Op::Sigmoid(x), &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let t = self.map(x, f64::tanh);
        self.push_op(t, Op::Tanh(x), &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.map(x, |v| v.max(0.0));
        self.push_op(t, Op::Relu(x), &[x])
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        check_axis(xv, axis)?;
        let mut data = xv.data().to_vec();
        for_each_lane(xv.shape(), axis, |idx| {
            let max = idx.clone().map(|i| data[i]).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for i in idx.clone() {
                data[i] = (data[i] - max).exp();
                z += data[i];
            }
            for i in idx {
                data[i] /= z;
            }
        });
        let t = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push_op(t, Op::Softmax { input: x, axis }, &[x]))
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        check_axis(xv, axis)?;
        let mut data = xv.data().to_vec();
        for_each_lane(xv.shape(), axis, |idx| {
            let max = idx.clone().map(|i| data[i]).fold(f64::NEG_INFINITY, f64::max);
            let lse = max + idx.clone().map(|i| (data[i] - max).exp()).sum::<f64>().ln();
            for i in idx {
                data[i] -= lse;
            }
        });
        let t = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push_op(t, Op::LogSoftmax { input: x, axis }, &[x]))
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push_op(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    /// Multiplies by a caller-built mask (entries 0 or 1/(1-p)).
    pub fn dropout(&mut self, x: Var, mask: &Tensor) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if xv.shape() != mask.shape() {
            return Err(mismatch("dropout", xv, mask));
        }
        let data = xv.data().iter().zip(mask.data()).map(|(a, m)| a * m).collect();
        let t = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push_op(
            t,
            Op::Dropout {
                input: x,
                mask: mask.clone(),
            },
            &[x],
        ))
    }

    pub fn gather_rows(&mut self, x: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let t = gather_rows(self.value(x), indices, "gather_rows")?;
        Ok(self.push_op(
            t,
            Op::GatherRows {
                input: x,
                indices: indices.to_vec(),
            },
            &[x],
        ))
    }

    /// Column-wise max over each row segment `(start, len)` of a matrix
    /// (max-pooling over time, one output row per segment).
    pub fn segment_max(&mut self, x: Var, segments: &[(usize, usize)]) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if xv.ndim() != 2 {
            return Err(TensorError::BadArgument("segment_max needs a matrix".into()));
        }
        let (rows, cols) = (xv.rows(), xv.cols());
        let mut data = Vec::with_capacity(segments.len() * cols);
        let mut argmax = Vec::with_capacity(segments.len() * cols);
        for &(start, len) in segments {
            if len == 0 || start + len > rows {
                return Err(TensorError::BadArgument(format!(
                    "segment ({start}, {len}) outside {rows} rows"
                )));
            }
            for c in 0..cols {
                let mut best = start;
                for r in start + 1..start + len {
                    if xv.at(r, c) > xv.at(best, c) {
                        best = r;
                    }
                }
                data.push(xv.at(best, c));
                argmax.push(best * cols + c);
            }
        }
        let t = Tensor::matrix(segments.len(), cols, data);
        Ok(self.push_op(t, Op::SegmentMax { input: x, argmax }, &[x]))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if xv.ndim() != 2 {
            return Err(TensorError::BadArgument("transpose needs a matrix".into()));
        }
        let (r, c) = (xv.rows(), xv.cols());
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = xv.at(i, j);
            }
        }
        Ok(self.push_op(Tensor::matrix(c, r, data), Op::Transpose(x), &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let xv = self.value(x);
        let t = Tensor::new(shape.to_vec(), xv.data().to_vec()).map_err(|_| TensorError::ShapeMismatch {
            op: "reshape",
            left: xv.shape().to_vec(),
            right: shape.to_vec(),
        })?;
        Ok(self.push_op(t, Op::Reshape(x), &[x]))
    }

    /// Entry `cols[i]` of every row `i` of a matrix, as a vector.
    pub fn pick(&mut self, x: Var, cols: &[usize]) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if xv.ndim() != 2 || xv.rows() != cols.len() || cols.iter().any(|&c| c >= xv.cols()) {
            return Err(TensorError::BadArgument(format!(
                "pick of {} columns from shape {:?}",
                cols.len(),
                xv.shape()
            )));
        }
        let data = cols.iter().enumerate().map(|(i, &c)| xv.at(i, c)).collect();
        Ok(self.push_op(
            Tensor::vector(data),
            Op::Pick {
                input: x,
                cols: cols.to_vec(),
            },
            &[x],
        ))
    }

    /// Reverse pass from a scalar. May run once per recording.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients, TensorError> {
        if !self.grad_enabled || loss.0 >= self.nodes.len() {
            return Err(TensorError::NoTape);
        }
        if self.consumed {
            return Err(TensorError::AlreadyBackpropagated);
        }
        if self.value(loss).numel() != 1 {
            return Err(TensorError::NotScalar(self.value(loss).shape().to_vec()));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), 1.0));

        for k in (0..=loss.0).rev() {
            let node = &self.nodes[k];
            if !node.requires_grad {
                continue;
            }
            let is_leaf = matches!(node.op, Op::Input | Op::Param(_) | Op::Lookup { .. } | Op::Constant);
            if is_leaf {
                continue;
            }
            let Some(g) = grads[k].take() else { continue };
            self.propagate(k, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, k: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[k];
        let out = node.value.as_ref().expect("op nodes own their value");
        let gd = g.data();
        match &node.op {
            Op::Input | Op::Constant | Op::Param(_) | Op::Lookup { .. } => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, kk, n) = (av.rows(), av.cols(), bv.cols());
                if self.nodes[a.0].requires_grad {
                    // dA = dC · Bᵀ
                    let ga = grad_slot(grads, *a, av.shape());
                    for i in 0..m {
                        for p in 0..kk {
                            let brow = &bv.data()[p * n..(p + 1) * n];
                            let grow = &gd[i * n..(i + 1) * n];
                            ga[i * kk + p] += dot(grow, brow);
                        }
                    }
                }
                if self.nodes[b.0].requires_grad {
                    // dB = Aᵀ · dC
                    let gb = grad_slot(grads, *b, bv.shape());
                    for i in 0..m {
                        let grow = &gd[i * n..(i + 1) * n];
                        for p in 0..kk {
                            let a_ip = av.data()[i * kk + p];
                            if a_ip == 0.0 {
                                continue;
                            }
                            for (dst, &x) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *dst += a_ip * x;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |dst| axpy(dst, gd, 1.0));
                self.accumulate(grads, *b, |dst| axpy(dst, gd, 1.0));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |dst| axpy(dst, gd, 1.0));
                self.accumulate(grads, *b, |dst| axpy(dst, gd, -1.0));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, |dst| {
                    for i in 0..dst.len() {
                        dst[i] += gd[i] * bv[i];
                    }
                });
                self.accumulate(grads, *b, |dst| {
                    for i in 0..dst.len() {
                        dst[i] += gd[i] * av[i];
                    }
                });
            }
            Op::ScalarMul { tensor, scalar } => {
                let s = self.value(*scalar).item();
                let tv = self.value(*tensor).data();
                self.accumulate(grads, *tensor, |dst| axpy(dst, gd, s));
                self.accumulate(grads, *scalar, |dst| dst[0] += dot(gd, tv));
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, |dst| axpy(dst, gd, *c)),
            Op::AddBias(x, b) => {
                self.accumulate(grads, *x, |dst| axpy(dst, gd, 1.0));
                self.accumulate(grads, *b, |dst| {
                    let n = dst.len();
                    for row in gd.chunks(n) {
                        axpy(dst, row, 1.0);
                    }
                });
            }
            Op::Concat { inputs, axis } => {
                let (outer, _, inner) = axis_split(out.shape(), *axis);
                let mut offset = 0;
                let full = out.shape()[*axis] * inner;
                for &v in inputs {
                    let chunk = self.value(v).shape()[*axis] * inner;
                    self.accumulate(grads, v, |dst| {
                        for o in 0..outer {
                            let src = &gd[o * full + offset..o * full + offset + chunk];
                            axpy(&mut dst[o * chunk..(o + 1) * chunk], src, 1.0);
                        }
                    });
                    offset += chunk;
                }
            }
            Op::Slice { input, axis, start } => {
                let in_shape = self.value(*input).shape();
                let (outer, full, inner) = axis_split(in_shape, *axis);
                let len = out.shape()[*axis];
                self.accumulate(grads, *input, |dst| {
                    for o in 0..outer {
                        let base = o * full * inner + start * inner;
                        let src = &gd[o * len * inner..(o + 1) * len * inner];
                        axpy(&mut dst[base..base + len * inner], src, 1.0);
                    }
                });
            }
            Op::Sigmoid(x) => {
                let y = out.data();
                self.accumulate(grads, *x, |dst| {
                    for i in 0..dst.len() {
                        dst[i] += gd[i] * y[i] * (1.0 - y[i]);
                    }
                });
            }
            Op::Tanh(x) => {
                let y = out.data();
                self.accumulate(grads, *x, |dst| {
                    for i in 0..dst.len() {
                        dst[i] += gd[i] * (1.0 - y[i] * y[i]);
                    }
                });
            }
            Op::Relu(x) => {
                let xv = self.value(*x).data();
                self.accumulate(grads, *x, |dst| {
                    for i in 0..dst.len() {
                        if xv[i] > 0.0 {
                            dst[i] += gd[i];
                        }
                    }
                });
            }
            Op::Softmax { input, axis } => {
                let y = out.data();
                self.accumulate(grads, *input, |dst| {
                    for_each_lane(out.shape(), *axis, |idx| {
                        let s: f64 = idx.clone().map(|i| gd[i] * y[i]).sum();
                        for i in idx {
                            dst[i] += y[i] * (gd[i] - s);
                        }
                    });
                });
            }
            Op::LogSoftmax { input, axis } => {
                let y = out.data();
                self.accumulate(grads, *input, |dst| {
                    for_each_lane(out.shape(), *axis, |idx| {
                        let s: f64 = idx.clone().map(|i| gd[i]).sum();
                        for i in idx {
                            dst[i] += gd[i] - y[i].exp() * s;
                        }
                    });
                });
            }
            Op::Sum(x) => {
                let g0 = gd[0];
                self.accumulate(grads, *x, |dst| dst.iter_mut().for_each(|d| *d += g0));
            }
            Op::Dropout { input, mask } => {
                let m = mask.data();
                self.accumulate(grads, *input, |dst| {
                    for i in 0..dst.len() {
                        dst[i] += gd[i] * m[i];
                    }
                });
            }
            Op::GatherRows { input, indices } => {
                let cols = out.shape()[1];
                self.accumulate(grads, *input, |dst| {
                    for (r, &src_row) in indices.iter().enumerate() {
                        axpy(
                            &mut dst[src_row * cols..(src_row + 1) * cols],
                            &gd[r * cols..(r + 1) * cols],
                            1.0,
                        );
                    }
                });
            }
            Op::SegmentMax { input, argmax } => {
                self.accumulate(grads, *input, |dst| {
                    for (i, &src) in argmax.iter().enumerate() {
                        dst[src] += gd[i];
                    }
                });
            }
            Op::Transpose(x) => {
                let (r, c) = (out.rows(), out.cols());
                self.accumulate(grads, *x, |dst| {
                    for i in 0..r {
                        for j in 0..c {
                            dst[j * r + i] += gd[i * c + j];
                        }
                    }
                });
            }
            Op::Reshape(x) => self.accumulate(grads, *x, |dst| axpy(dst, gd, 1.0)),
            Op::Pick { input, cols } => {
                let width = self.value(*input).cols();
                self.accumulate(grads, *input, |dst| {
                    for (i, &c) in cols.iter().enumerate() {
                        dst[i * width + c] += gd[i];
                    }
                });
            }
        }
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        f(grad_slot(grads, v, self.value(v).shape()));
    }

    /// Adds the gradients of parameter and lookup leaves into `store`.
    pub fn accumulate_param_grads(&self, grads: &Gradients, store: &mut GradStore) {
        for (k, node) in self.nodes.iter().enumerate() {
            let Some(g) = grads.grads.get(k).and_then(Option::as_ref) else {
                continue;
            };
            match &node.op {
                Op::Param(id) => store.get_mut(*id).add_assign(g.data()),
                Op::Lookup { param, indices } => {
                    let dst = store.get_mut(*param);
                    let cols = dst.shape()[1];
                    let data = dst.data_mut();
                    for (r, &row) in indices.iter().enumerate() {
                        axpy(
                            &mut data[row * cols..(row + 1) * cols],
                            &g.data()[r * cols..(r + 1) * cols],
                            1.0,
                        );
                    }
                }
                _ => {}
            }
        }
    }
}

fn grad_slot<'g>(grads: &'g mut [Option<Tensor>], v: Var, shape: &[usize]) -> &'g mut [f64] {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape)).data_mut()
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn check_axis(t: &Tensor, axis: usize) -> Result<(), TensorError> {
    if axis >= t.ndim() {
        return Err(TensorError::BadArgument(format!(
            "axis {axis} out of range for shape {:?}",
            t.shape()
        )));
    }
    Ok(())
}

/// Calls `f` with the flat indices of every 1-D lane along `axis`.
fn for_each_lane(shape: &[usize], axis: usize, mut f: impl FnMut(std::iter::StepBy<std::ops::Range<usize>>)) {
    let (outer, len, inner) = axis_split(shape, axis);
    for o in 0..outer {
        for i in 0..inner {
            let base = o * len * inner + i;
            f((base..base + len * inner).step_by(inner));
        }
    }
}

fn gather_rows(t: &Tensor, indices: &[usize], op: &'static str) -> Result<Tensor, TensorError> {
    if t.ndim() != 2 {
        return Err(TensorError::BadArgument(format!("{op} needs a matrix")));
    }
    let (rows, cols) = (t.rows(), t.cols());
    let mut data = Vec::with_capacity(indices.len() * cols);
    for &i in indices {
        if i >= rows {
            return Err(TensorError::BadArgument(format!("{op}: row {i} of {rows}")));
        }
        data.extend_from_slice(t.row(i));
    }
    Ok(Tensor::matrix(indices.len(), cols, data))
}

fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let a_ip = a[i * k + p];
            if a_ip == 0.0 {
                continue;
            }
            for (o, &bv) in orow.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += a_ip * bv;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(dst: &mut [f64], src: &[f64], alpha: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
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
