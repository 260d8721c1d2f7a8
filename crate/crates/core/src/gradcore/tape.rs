//! Operation tape: forward recording and reverse-mode gradient accumulation.

use crate::linalg;
use crate::scalar::Scalar;

use super::{GradError, Tensor};

/// Handle to a node on a [`Tape`]. Only valid for the tape that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<S> {
    Leaf,
    /// y = x @ w + b, broadcasting b over rows.
    Affine { x: Var, w: Var, b: Var },
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Sqrt(Var),
    Ln(Var),
    Exp(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, S),
    AddScalar(Var, S),
    Sum(Var),
    Mean(Var),
    /// Sum of absolute values.
    L1(Var),
    /// Sum of squares.
    L2Sq(Var),
    /// Softmax over a rank-1 tensor.
    Softmax(Var),
    /// Per-row cross-entropy of softmaxed logits against integer labels.
    SoftmaxCrossEntropy { logits: Var, labels: Vec<usize> },
    Concat { parts: Vec<Var>, axis: usize },
    Slice { x: Var, axis: usize, start: usize, end: usize },
    /// Same data, different shape.
    Reshape(Var),
}

struct Node<S> {
    op: Op<S>,
    value: Tensor<S>,
}

/// Records primitive operations and their forward values.
///
/// A tape is owned by exactly one training step: create it, stage leaves,
/// build the forward computation, call [`Tape::backward`], then drop it.
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op<S>, value: Tensor<S>) -> Var {
        debug_assert!(
            value.is_finite(),
            "non-finite forward value at node {}",
            self.nodes.len()
        );
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Insert an input or parameter tensor.
    pub fn leaf(&mut self, value: Tensor<S>) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn constant(&mut self, value: S) -> Var {
        self.push(Op::Leaf, Tensor::scalar(value))
    }

    // ── forward primitives ──────────────────────────────────────────

    /// x @ w + b. `x` is `[m,k]` (or `[k]`, treated as one row), `w` is
    /// `[k,n]`, `b` is `[n]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var, GradError> {
        let (m, k) = row_shape("affine", self.value(x))?;
        let ws = self.value(w).shape().to_vec();
        if ws.len() != 2 || ws[0] != k {
            return Err(GradError::ShapeMismatch {
                op: "affine(x,w)",
                lhs: self.value(x).shape().to_vec(),
                rhs: ws,
            });
        }
        let n = ws[1];
        let bs = self.value(b).shape().to_vec();
        if bs != [n] {
            return Err(GradError::ShapeMismatch {
                op: "affine(w,b)",
                lhs: ws,
                rhs: bs,
            });
        }
        let mut out = linalg::matmul(self.value(x).data(), self.value(w).data(), m, k, n);
        let bias = self.value(b).data();
        for row in out.chunks_mut(n) {
            for j in 0..n {
                row[j] += bias[j];
            }
        }
        let shape = if self.value(x).rank() == 1 {
            vec![n]
        } else {
            vec![m, n]
        };
        Ok(self.push(Op::Affine { x, w, b }, Tensor::from_raw(shape, out)))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.unary_map(x, |a| if a > S::zero() { a } else { S::zero() });
        self.push(Op::Relu(x), v)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.unary_map(x, |a| a.tanh());
        self.push(Op::Tanh(x), v)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let one = S::one();
        let v = self.unary_map(x, |a| one / (one + (-a).exp()));
        self.push(Op::Sigmoid(x), v)
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.unary_map(x, |a| a.exp());
        self.push(Op::Exp(x), v)
    }

    /// Elementwise square root. Inputs must be non-negative; the derivative
    /// at exactly zero is taken to be zero (deterministic kink rule, same
    /// spirit as relu).
    pub fn sqrt(&mut self, x: Var) -> Result<Var, GradError> {
        if self.value(x).data().iter().any(|&a| a < S::zero()) {
            return Err(GradError::Domain {
                op: "sqrt",
                reason: "negative input".into(),
            });
        }
        let v = self.unary_map(x, |a| a.sqrt());
        Ok(self.push(Op::Sqrt(x), v))
    }

    /// Elementwise natural logarithm of strictly positive inputs.
    pub fn ln(&mut self, x: Var) -> Result<Var, GradError> {
        if self.value(x).data().iter().any(|&a| a <= S::zero()) {
            return Err(GradError::Domain {
                op: "ln",
                reason: "non-positive input".into(),
            });
        }
        let v = self.unary_map(x, |a| a.ln());
        Ok(self.push(Op::Ln(x), v))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let v = self.binary_map("add", a, b, |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let v = self.binary_map("sub", a, b, |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let v = self.binary_map("mul", a, b, |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn scale(&mut self, x: Var, c: S) -> Var {
        let v = self.unary_map(x, |a| a * c);
        self.push(Op::Scale(x, c), v)
    }

    pub fn add_scalar(&mut self, x: Var, c: S) -> Var {
        let v = self.unary_map(x, |a| a + c);
        self.push(Op::AddScalar(x, c), v)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().copied().sum();
        self.push(Op::Sum(x), Tensor::scalar(s))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = S::from_f64(self.value(x).numel() as f64);
        let s: S = self.value(x).data().iter().copied().sum();
        self.push(Op::Mean(x), Tensor::scalar(s / n))
    }

    /// Sum of absolute values. Subgradient at zero is zero.
    pub fn l1(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().map(|a| a.abs()).sum();
        self.push(Op::L1(x), Tensor::scalar(s))
    }

    /// Sum of squares.
    pub fn l2sq(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().map(|&a| a * a).sum();
        self.push(Op::L2Sq(x), Tensor::scalar(s))
    }

    /// Softmax over a rank-1 tensor.
    pub fn softmax(&mut self, x: Var) -> Result<Var, GradError> {
        let xs = self.value(x);
        if xs.rank() != 1 {
            return Err(GradError::InvalidShape {
                op: "softmax",
                shape: xs.shape().to_vec(),
                reason: "expected rank-1".into(),
            });
        }
        let v = softmax_slice(xs.data());
        Ok(self.push(Op::Softmax(x), Tensor::vector(v)))
    }

    /// Per-sample cross-entropy between softmaxed logits and integer labels.
    /// `logits` is `[batch, classes]` (or `[classes]` for a single sample);
    /// the output is `[batch]`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        labels: &[usize],
    ) -> Result<Var, GradError> {
        let ls = self.value(logits);
        let (batch, classes) = row_shape("softmax_cross_entropy", ls)?;
        if labels.len() != batch {
            return Err(GradError::ShapeMismatch {
                op: "softmax_cross_entropy(labels)",
                lhs: ls.shape().to_vec(),
                rhs: vec![labels.len()],
            });
        }
        for &label in labels {
            if label >= classes {
                return Err(GradError::LabelOutOfRange { label, classes });
            }
        }
        let mut out = Vec::with_capacity(batch);
        for (row, &label) in ls.data().chunks(classes).zip(labels) {
            out.push(log_sum_exp(row) - row[label]);
        }
        Ok(self.push(
            Op::SoftmaxCrossEntropy {
                logits,
                labels: labels.to_vec(),
            },
            Tensor::vector(out),
        ))
    }

    /// Concatenate tensors of equal rank along `axis`.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, GradError> {
        if parts.is_empty() {
            return Err(GradError::InvalidShape {
                op: "concat",
                shape: vec![],
                reason: "no inputs".into(),
            });
        }
        let first = self.value(parts[0]).shape().to_vec();
        if axis >= first.len() {
            return Err(GradError::InvalidShape {
                op: "concat",
                shape: first,
                reason: format!("axis {} out of range", axis),
            });
        }
        let mut axis_total = 0;
        for &p in parts {
            let s = self.value(p).shape();
            let compatible = s.len() == first.len()
                && s.iter()
                    .zip(&first)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(GradError::ShapeMismatch {
                    op: "concat",
                    lhs: first,
                    rhs: s.to_vec(),
                });
            }
            axis_total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = axis_total;
        let outer: usize = first[..axis].iter().product();
        let inner: usize = first[axis + 1..].iter().product();
        let mut data = vec![S::zero(); shape.iter().product()];
        let mut axis_off = 0;
        for &p in parts {
            let ps = self.value(p);
            let pa = ps.shape()[axis];
            for o in 0..outer {
                let src = &ps.data()[o * pa * inner..(o + 1) * pa * inner];
                let dst_start = (o * axis_total + axis_off) * inner;
                data[dst_start..dst_start + pa * inner].copy_from_slice(src);
            }
            axis_off += pa;
        }
        Ok(self.push(
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            Tensor::from_raw(shape, data),
        ))
    }

    /// Take the half-open range `[start, end)` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, end: usize) -> Result<Var, GradError> {
        let xs = self.value(x).shape().to_vec();
        if axis >= xs.len() || start >= end || end > xs[axis] {
            return Err(GradError::InvalidShape {
                op: "slice",
                shape: xs,
                reason: format!("axis {} range {}..{}", axis, start, end),
            });
        }
        let outer: usize = xs[..axis].iter().product();
        let inner: usize = xs[axis + 1..].iter().product();
        let d = xs[axis];
        let width = end - start;
        let mut shape = xs.clone();
        shape[axis] = width;
        let mut data = vec![S::zero(); outer * width * inner];
        let src = self.value(x).data();
        for o in 0..outer {
            let s = (o * d + start) * inner;
            data[o * width * inner..(o + 1) * width * inner]
                .copy_from_slice(&src[s..s + width * inner]);
        }
        Ok(self.push(
            Op::Slice { x, axis, start, end },
            Tensor::from_raw(shape, data),
        ))
    }

    /// Convenience: row `r` of a rank-2 tensor, as `[1, cols]`.
    pub fn row(&mut self, x: Var, r: usize) -> Result<Var, GradError> {
        self.slice(x, 0, r, r + 1)
    }

    /// Reinterpret the elements under a new shape of equal size.
    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var, GradError> {
        let xs = self.value(x);
        if shape.iter().product::<usize>() != xs.numel() || shape.iter().any(|&d| d == 0) {
            return Err(GradError::InvalidShape {
                op: "reshape",
                shape,
                reason: format!("incompatible with {} elements", xs.numel()),
            });
        }
        let data = xs.data().to_vec();
        Ok(self.push(Op::Reshape(x), Tensor::from_raw(shape, data)))
    }

    // ── backward ────────────────────────────────────────────────────

    /// Reverse sweep from a scalar root. Returns per-node gradients; leaves
    /// not reached by the sweep report zero gradients.
    pub fn backward(&self, root: Var) -> Result<Gradients<S>, GradError> {
        let root_val = &self.nodes[root.0].value;
        if !root_val.is_scalar() {
            return Err(GradError::NonScalarRoot {
                shape: root_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<S>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(vec![S::one()]);

        for i in (0..self.nodes.len()).rev() {
            let (lower, upper) = grads.split_at_mut(i);
            let g = match &upper[0] {
                Some(g) => g,
                None => continue,
            };
            self.backward_op(i, g, lower);
        }

        let tensors = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.map(|d| Tensor::from_raw(self.nodes[i].value.shape().to_vec(), d)))
            .collect();
        Ok(Gradients { grads: tensors })
    }

    fn backward_op(&self, i: usize, g: &[S], lower: &mut [Option<Vec<S>>]) {
        let node = &self.nodes[i];
        let val = |v: Var| self.nodes[v.0].value.data();
        let numel = |v: Var| self.nodes[v.0].value.numel();
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (m, k) = (
                    self.nodes[x.0].value.numel() / self.nodes[w.0].value.shape()[0],
                    self.nodes[w.0].value.shape()[0],
                );
                let n = self.nodes[w.0].value.shape()[1];
                // dx = g @ w^T
                let dx = linalg::matmul_bt(g, val(*w), m, n, k);
                acc(&mut lower[x.0], &dx);
                // dw = x^T @ g
                let dw = linalg::matmul_at(val(*x), g, k, m, n);
                acc(&mut lower[w.0], &dw);
                // db = column sums of g
                let slot = lower[b.0].get_or_insert_with(|| vec![S::zero(); n]);
                for row in g.chunks(n) {
                    for j in 0..n {
                        slot[j] += row[j];
                    }
                }
            }
            Op::Relu(x) => {
                let xv = val(*x);
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for (di, (&gi, &xi)) in d.iter_mut().zip(g.iter().zip(xv)) {
                        if xi > S::zero() {
                            *di += gi;
                        }
                    }
                });
            }
            Op::Tanh(x) => {
                let y = node.value.data();
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] * (S::one() - y[j] * y[j]);
                    }
                });
            }
            Op::Sigmoid(x) => {
                let y = node.value.data();
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] * y[j] * (S::one() - y[j]);
                    }
                });
            }
            Op::Sqrt(x) => {
                let y = node.value.data();
                let half = S::from_f64(0.5);
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for j in 0..g.len() {
                        if y[j] > S::zero() {
                            d[j] += g[j] * half / y[j];
                        }
                    }
                });
            }
            Op::Ln(x) => {
                let xv = val(*x);
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] / xv[j];
                    }
                });
            }
            Op::Exp(x) => {
                let y = node.value.data();
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] * y[j];
                    }
                });
            }
            Op::Add(a, b) => {
                acc(&mut lower[a.0], g);
                acc(&mut lower[b.0], g);
            }
            Op::Sub(a, b) => {
                acc(&mut lower[a.0], g);
                acc_map(&mut lower[b.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] -= g[j];
                    }
                });
            }
            Op::Mul(a, b) => {
                let av = val(*a);
                let bv = val(*b);
                acc_map(&mut lower[a.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] * bv[j];
                    }
                });
                acc_map(&mut lower[b.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] * av[j];
                    }
                });
            }
            Op::Scale(x, c) => {
                let c = *c;
                acc_map(&mut lower[x.0], g.len(), |d| {
                    for j in 0..g.len() {
                        d[j] += g[j] * c;
                    }
                });
            }
            Op::AddScalar(x, _) => acc(&mut lower[x.0], g),
            Op::Sum(x) => {
                let g0 = g[0];
                acc_map(&mut lower[x.0], numel(*x), |d| {
                    for dj in d.iter_mut() {
                        *dj += g0;
                    }
                });
            }
            Op::Mean(x) => {
                let n = numel(*x);
                let g0 = g[0] / S::from_f64(n as f64);
                acc_map(&mut lower[x.0], n, |d| {
                    for dj in d.iter_mut() {
                        *dj += g0;
                    }
                });
            }
            Op::L1(x) => {
                let xv = val(*x);
                let g0 = g[0];
                acc_map(&mut lower[x.0], xv.len(), |d| {
                    for j in 0..xv.len() {
                        if xv[j] > S::zero() {
                            d[j] += g0;
                        } else if xv[j] < S::zero() {
                            d[j] -= g0;
                        }
                    }
                });
            }
            Op::L2Sq(x) => {
                let xv = val(*x);
                let g0 = g[0] + g[0];
                acc_map(&mut lower[x.0], xv.len(), |d| {
                    for j in 0..xv.len() {
                        d[j] += g0 * xv[j];
                    }
                });
            }
            Op::Softmax(x) => {
                let y = node.value.data();
                let mut dot = S::zero();
                for j in 0..y.len() {
                    dot += g[j] * y[j];
                }
                acc_map(&mut lower[x.0], y.len(), |d| {
                    for j in 0..y.len() {
                        d[j] += y[j] * (g[j] - dot);
                    }
                });
            }
            Op::SoftmaxCrossEntropy { logits, labels } => {
                let ls = &self.nodes[logits.0].value;
                let classes = *ls.shape().last().unwrap();
                let lv = ls.data();
                acc_map(&mut lower[logits.0], lv.len(), |d| {
                    for (r, &label) in labels.iter().enumerate() {
                        let row = &lv[r * classes..(r + 1) * classes];
                        let p = softmax_slice(row);
                        let gr = g[r];
                        let drow = &mut d[r * classes..(r + 1) * classes];
                        for j in 0..classes {
                            drow[j] += gr * p[j];
                        }
                        drow[label] -= gr;
                    }
                });
            }
            Op::Concat { parts, axis } => {
                let shape = node.value.shape();
                let outer: usize = shape[..*axis].iter().product();
                let inner: usize = shape[*axis + 1..].iter().product();
                let axis_total = shape[*axis];
                let mut axis_off = 0;
                for &p in parts {
                    let pa = self.nodes[p.0].value.shape()[*axis];
                    let pn = self.nodes[p.0].value.numel();
                    acc_map(&mut lower[p.0], pn, |d| {
                        for o in 0..outer {
                            let src_start = (o * axis_total + axis_off) * inner;
                            let dst = &mut d[o * pa * inner..(o + 1) * pa * inner];
                            for (dj, &gj) in
                                dst.iter_mut().zip(&g[src_start..src_start + pa * inner])
                            {
                                *dj += gj;
                            }
                        }
                    });
                    axis_off += pa;
                }
            }
            Op::Reshape(x) => acc(&mut lower[x.0], g),
            Op::Slice { x, axis, start, end } => {
                let xs = self.nodes[x.0].value.shape();
                let outer: usize = xs[..*axis].iter().product();
                let inner: usize = xs[*axis + 1..].iter().product();
                let d_axis = xs[*axis];
                let width = end - start;
                let xn = self.nodes[x.0].value.numel();
                acc_map(&mut lower[x.0], xn, |d| {
                    for o in 0..outer {
                        let dst_start = (o * d_axis + start) * inner;
                        let src = &g[o * width * inner..(o + 1) * width * inner];
                        for (dj, &gj) in
                            d[dst_start..dst_start + width * inner].iter_mut().zip(src)
                        {
                            *dj += gj;
                        }
                    }
                });
            }
        }
    }
}

/// Gradient map produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<S> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads[v.index()].as_ref()
    }

    /// Gradient for `v`, materializing zeros for nodes the sweep never
    /// reached (e.g. parameters the root does not depend on).
    pub fn take_or_zeros(&mut self, v: Var, shape: &[usize]) -> Tensor<S> {
        self.grads[v.index()]
            .take()
            .unwrap_or_else(|| Tensor::zeros(shape))
    }
}

// ── helpers ─────────────────────────────────────────────────────────

impl<S: Scalar> Tape<S> {
    fn unary_map(&self, x: Var, f: impl Fn(S) -> S) -> Tensor<S> {
        let xs = &self.nodes[x.0].value;
        Tensor::from_raw(xs.shape().to_vec(), xs.data().iter().map(|&a| f(a)).collect())
    }

    fn binary_map(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(S, S) -> S,
    ) -> Result<Tensor<S>, GradError> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.shape() != bv.shape() {
            return Err(GradError::ShapeMismatch {
                op,
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(Tensor::from_raw(av.shape().to_vec(), data))
    }
}

fn row_shape<S: Scalar>(op: &'static str, t: &Tensor<S>) -> Result<(usize, usize), GradError> {
    match t.rank() {
        1 => Ok((1, t.shape()[0])),
        2 => Ok((t.shape()[0], t.shape()[1])),
        _ => Err(GradError::InvalidShape {
            op,
            shape: t.shape().to_vec(),
            reason: "expected rank 1 or 2".into(),
        }),
    }
}

fn acc<S: Scalar>(slot: &mut Option<Vec<S>>, g: &[S]) {
    match slot {
        Some(d) => {
            for j in 0..g.len() {
                d[j] += g[j];
            }
        }
        None => *slot = Some(g.to_vec()),
    }
}

fn acc_map<S: Scalar>(slot: &mut Option<Vec<S>>, len: usize, f: impl FnOnce(&mut [S])) {
    let d = slot.get_or_insert_with(|| vec![S::zero(); len]);
    f(d);
}

fn softmax_slice<S: Scalar>(row: &[S]) -> Vec<S> {
    let max = row.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = row.iter().map(|&a| (a - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp<S: Scalar>(row: &[S]) -> S {
    let max = row.iter().copied().fold(S::neg_infinity(), S::max);
    let total: S = row.iter().map(|&a| (a - max).exp()).sum();
    max + total.ln()
}
