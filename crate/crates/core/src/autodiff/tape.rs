use std::rc::Rc;

use super::tensor::{numel, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`]. Ids increase strictly in
/// recording order, so the tape is topologically sorted by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
    Neg,
    Exp,
    Log,
    Tanh,
    Sigmoid,
    Relu,
    Square,
    Softplus,
}

impl ElementwiseOp {
    pub fn is_binary(self) -> bool {
        matches!(self, Self::Add | Self::Sub | Self::Mul)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    Max,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Binary(ElementwiseOp, Var, Var),
    Unary(ElementwiseOp, Var),
    Affine(Var, f64),
    MatMul(Var, Var),
    Reduce {
        kind: ReduceOp,
        input: Var,
        axis: Option<usize>,
        argmax: Vec<usize>,
    },
    Concat {
        inputs: Vec<Var>,
        axis: usize,
    },
    Narrow {
        input: Var,
        axis: usize,
        start: usize,
    },
    Softmax {
        input: Var,
        axis: usize,
    },
    Reshape(Var),
    GatherRows {
        input: Var,
        index: Rc<[usize]>,
    },
    ScatterAddRows {
        input: Var,
        index: Rc<[usize]>,
    },
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Computation record for one forward pass. Operations evaluate eagerly and
/// append a node; [`Tape::backward`] walks the nodes in exact reverse order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

/// Split `shape` around `axis` into (outer, len, inner) extents.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = numel(&shape[..axis]);
    let inner = numel(&shape[axis + 1..]);
    (outer, shape[axis], inner)
}

fn is_suffix(small: &[usize], big: &[usize]) -> bool {
    small.len() <= big.len() && big[big.len() - small.len()..] == *small
}

fn unary_forward(op: ElementwiseOp, x: f64) -> f64 {
    match op {
        ElementwiseOp::Neg => -x,
        ElementwiseOp::Exp => x.exp(),
        ElementwiseOp::Log => x.ln(),
        ElementwiseOp::Tanh => x.tanh(),
        ElementwiseOp::Sigmoid => {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        }
        ElementwiseOp::Relu => x.max(0.0),
        ElementwiseOp::Square => x * x,
        ElementwiseOp::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
        _ => unreachable!("binary op in unary position"),
    }
}

/// d(out)/d(in) given input `x` and output `y`.
fn unary_derivative(op: ElementwiseOp, x: f64, y: f64) -> f64 {
    match op {
        ElementwiseOp::Neg => -1.0,
        ElementwiseOp::Exp => y,
        ElementwiseOp::Log => 1.0 / x,
        ElementwiseOp::Tanh => 1.0 - y * y,
        ElementwiseOp::Sigmoid => y * (1.0 - y),
        ElementwiseOp::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ElementwiseOp::Square => 2.0 * x,
        ElementwiseOp::Softplus => unary_forward(ElementwiseOp::Sigmoid, x),
        _ => unreachable!("binary op in unary position"),
    }
}

fn add_into(dst: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    dst.get_or_insert_with(|| vec![0.0; len])
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

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(numel(&shape), value.len());
        // Nodes outside the differentiable subgraph keep only their value.
        let op = if requires_grad { op } else { Op::Leaf };
        self.nodes.push(Node {
            shape,
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.node(v).requires_grad
    }

    /// Scalar value of a single-element node.
    pub fn item(&self, v: Var) -> f64 {
        self.node(v).value[0]
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let n = self.node(v);
        Tensor::new(n.shape.clone(), n.value.clone()).expect("tape node shape is consistent")
    }

    /// Record a tensor as a leaf, tracking gradients if the tensor asks for them.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        self.push(
            t.shape().to_vec(),
            t.data().to_vec(),
            Op::Leaf,
            t.requires_grad(),
        )
    }

    pub fn constant(&mut self, shape: &[usize], data: Vec<f64>) -> Result<Var> {
        if numel(shape) != data.len() {
            return Err(Error::ShapeMismatch {
                op: "constant",
                left: shape.to_vec(),
                right: vec![data.len()],
            });
        }
        Ok(self.push(shape.to_vec(), data, Op::Leaf, false))
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.push(Vec::new(), vec![value], Op::Leaf, false)
    }

    /// Copy of `v` that is cut off from the differentiable graph.
    pub fn detach(&mut self, v: Var) -> Var {
        let n = self.node(v);
        let (shape, value) = (n.shape.clone(), n.value.clone());
        self.push(shape, value, Op::Leaf, false)
    }

    pub fn elementwise(&mut self, op: ElementwiseOp, a: Var, b: Option<Var>) -> Result<Var> {
        match (op.is_binary(), b) {
            (true, Some(b)) => self.binary(op, a, b),
            (false, None) => self.unary(op, a),
            (true, None) => Err(Error::InvalidArgument(format!("{op:?} needs two operands"))),
            (false, Some(_)) => Err(Error::InvalidArgument(format!("{op:?} takes one operand"))),
        }
    }

    fn binary(&mut self, op: ElementwiseOp, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (&self.node(a).shape, &self.node(b).shape);
        let (na, nb) = (numel(sa), numel(sb));
        // Only trailing-dimension broadcasting: the smaller operand's shape
        // must be a suffix of the larger one, so flat index `i % n` addresses it.
        let shape = if sa == sb || nb == 1 || is_suffix(sb, sa) {
            sa.clone()
        } else if na == 1 || is_suffix(sa, sb) {
            sb.clone()
        } else {
            return Err(Error::ShapeMismatch {
                op: "elementwise",
                left: sa.clone(),
                right: sb.clone(),
            });
        };
        let (va, vb) = (&self.node(a).value, &self.node(b).value);
        let n = numel(&shape);
        let f = |x: f64, y: f64| match op {
            ElementwiseOp::Add => x + y,
            ElementwiseOp::Sub => x - y,
            _ => x * y,
        };
        let value: Vec<f64> = if na == nb {
            va.iter().zip(vb).map(|(&x, &y)| f(x, y)).collect()
        } else {
            (0..n).map(|i| f(va[i % na], vb[i % nb])).collect()
        };
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        Ok(self.push(shape, value, Op::Binary(op, a, b), rg))
    }

    fn unary(&mut self, op: ElementwiseOp, a: Var) -> Result<Var> {
        let node = self.node(a);
        if op == ElementwiseOp::Log {
            if let Some(&bad) = node.value.iter().find(|&&x| !(x > 0.0)) {
                return Err(Error::LogDomain(bad));
            }
        }
        let value = node.value.iter().map(|&x| unary_forward(op, x)).collect();
        let (shape, rg) = (node.shape.clone(), node.requires_grad);
        Ok(self.push(shape, value, Op::Unary(op, a), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(ElementwiseOp::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(ElementwiseOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(ElementwiseOp::Mul, a, b)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Neg, a).expect("neg is total")
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Exp, a).expect("exp is total")
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.unary(ElementwiseOp::Log, a)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Tanh, a).expect("tanh is total")
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Sigmoid, a).expect("sigmoid is total")
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Relu, a).expect("relu is total")
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Square, a).expect("square is total")
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(ElementwiseOp::Softplus, a).expect("softplus is total")
    }

    /// `scale * a + shift`.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let node = self.node(a);
        let value = node.value.iter().map(|&x| scale * x + shift).collect();
        let (shape, rg) = (node.shape.clone(), node.requires_grad);
        self.push(shape, value, Op::Affine(a, scale), rg)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.affine(a, s, 0.0)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (&self.node(a).shape, &self.node(b).shape);
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: sa.clone(),
                right: sb.clone(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            &self.node(a).value,
            (k as isize, 1),
            &self.node(b).value,
            (n as isize, 1),
            &mut out,
        );
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), rg))
    }

    pub fn reduce(&mut self, kind: ReduceOp, a: Var, axis: Option<usize>) -> Result<Var> {
        let node = self.node(a);
        let (shape, value, argmax) = match axis {
            None => {
                let v = &node.value;
                let (val, arg) = match kind {
                    ReduceOp::Sum => (v.iter().sum(), Vec::new()),
                    ReduceOp::Mean => (v.iter().sum::<f64>() / v.len() as f64, Vec::new()),
                    ReduceOp::Max => {
                        let (i, m) = argmax_of(v.iter().copied().enumerate());
                        (m, vec![i])
                    }
                };
                (Vec::new(), vec![val], arg)
            }
            Some(ax) => {
                if ax >= node.shape.len() {
                    return Err(Error::InvalidAxis {
                        op: "reduce",
                        axis: ax,
                        rank: node.shape.len(),
                    });
                }
                let (outer, len, inner) = split_axis(&node.shape, ax);
                let mut out = vec![0.0; outer * inner];
                let mut arg = Vec::new();
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |l: usize| (o * len + l) * inner + i;
                        out[o * inner + i] = match kind {
                            ReduceOp::Sum => (0..len).map(|l| node.value[at(l)]).sum(),
                            ReduceOp::Mean => {
                                (0..len).map(|l| node.value[at(l)]).sum::<f64>() / len as f64
                            }
                            ReduceOp::Max => {
                                let (idx, m) =
                                    argmax_of((0..len).map(|l| (at(l), node.value[at(l)])));
                                arg.push(idx);
                                m
                            }
                        };
                    }
                }
                let mut shape = node.shape.clone();
                shape.remove(ax);
                (shape, out, arg)
            }
        };
        let rg = node.requires_grad;
        Ok(self.push(
            shape,
            value,
            Op::Reduce {
                kind,
                input: a,
                axis,
                argmax,
            },
            rg,
        ))
    }

    pub fn sum(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.reduce(ReduceOp::Sum, a, axis)
    }

    pub fn mean(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.reduce(ReduceOp::Mean, a, axis)
    }

    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = inputs.first().ok_or(Error::Empty("concat inputs"))?;
        let base = self.node(*first).shape.clone();
        if axis >= base.len() {
            return Err(Error::InvalidAxis {
                op: "concat",
                axis,
                rank: base.len(),
            });
        }
        let mut total = 0;
        for &v in inputs {
            let s = &self.node(v).shape;
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    left: base,
                    right: s.clone(),
                });
            }
            total += s[axis];
        }
        let (outer, _, inner) = split_axis(&base, axis);
        let mut value = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &v in inputs {
                let n = self.node(v);
                let chunk = n.shape[axis] * inner;
                value.extend_from_slice(&n.value[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let rg = inputs.iter().any(|&v| self.node(v).requires_grad);
        Ok(self.push(
            shape,
            value,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            rg,
        ))
    }

    /// Slice `len` entries starting at `start` along `axis`.
    pub fn narrow(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let node = self.node(a);
        if axis >= node.shape.len() {
            return Err(Error::InvalidAxis {
                op: "narrow",
                axis,
                rank: node.shape.len(),
            });
        }
        if len == 0 || start + len > node.shape[axis] {
            return Err(Error::InvalidArgument(format!(
                "narrow {start}..{} exceeds axis of size {}",
                start + len,
                node.shape[axis]
            )));
        }
        let (outer, full, inner) = split_axis(&node.shape, axis);
        let mut value = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * full + start) * inner;
            value.extend_from_slice(&node.value[base..base + len * inner]);
        }
        let mut shape = node.shape.clone();
        shape[axis] = len;
        let rg = node.requires_grad;
        Ok(self.push(shape, value, Op::Narrow { input: a, axis, start }, rg))
    }

    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let node = self.node(a);
        if axis >= node.shape.len() {
            return Err(Error::InvalidAxis {
                op: "softmax",
                axis,
                rank: node.shape.len(),
            });
        }
        if node.value.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("softmax"));
        }
        let (outer, len, inner) = split_axis(&node.shape, axis);
        let mut value = vec![0.0; node.value.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |l: usize| (o * len + l) * inner + i;
                let m = (0..len)
                    .map(|l| node.value[at(l)])
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for l in 0..len {
                    let e = (node.value[at(l)] - m).exp();
                    value[at(l)] = e;
                    z += e;
                }
                for l in 0..len {
                    value[at(l)] /= z;
                }
            }
        }
        let (shape, rg) = (node.shape.clone(), node.requires_grad);
        Ok(self.push(shape, value, Op::Softmax { input: a, axis }, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let node = self.node(a);
        if numel(shape) != node.value.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: node.shape.clone(),
                right: shape.to_vec(),
            });
        }
        let (value, rg) = (node.value.clone(), node.requires_grad);
        Ok(self.push(shape.to_vec(), value, Op::Reshape(a), rg))
    }

    /// Select rows (first-axis slices) of `a` by index; rows may repeat.
    pub fn gather_rows(&mut self, a: Var, index: Rc<[usize]>) -> Result<Var> {
        let node = self.node(a);
        let rows = *node.shape.first().ok_or(Error::InvalidAxis {
            op: "gather_rows",
            axis: 0,
            rank: 0,
        })?;
        if let Some(&bad) = index.iter().find(|&&r| r >= rows) {
            return Err(Error::InvalidArgument(format!(
                "gather index {bad} out of {rows} rows"
            )));
        }
        let width = node.value.len() / rows;
        let mut value = Vec::with_capacity(index.len() * width);
        for &r in index.iter() {
            value.extend_from_slice(&node.value[r * width..(r + 1) * width]);
        }
        let mut shape = node.shape.clone();
        shape[0] = index.len();
        let rg = node.requires_grad;
        Ok(self.push(shape, value, Op::GatherRows { input: a, index }, rg))
    }

    /// Sum row `k` of `a` into output row `index[k]`; output has `rows` rows.
    pub fn scatter_add_rows(&mut self, a: Var, index: Rc<[usize]>, rows: usize) -> Result<Var> {
        let node = self.node(a);
        if node.shape.first() != Some(&index.len()) {
            return Err(Error::ShapeMismatch {
                op: "scatter_add_rows",
                left: node.shape.clone(),
                right: vec![index.len()],
            });
        }
        if let Some(&bad) = index.iter().find(|&&r| r >= rows) {
            return Err(Error::InvalidArgument(format!(
                "scatter index {bad} out of {rows} rows"
            )));
        }
        let width = node.value.len() / index.len();
        let mut value = vec![0.0; rows * width];
        for (k, &r) in index.iter().enumerate() {
            let src = &node.value[k * width..(k + 1) * width];
            value[r * width..(r + 1) * width]
                .iter_mut()
                .zip(src)
                .for_each(|(d, s)| *d += s);
        }
        let mut shape = node.shape.clone();
        shape[0] = rows;
        let rg = node.requires_grad;
        Ok(self.push(shape, value, Op::ScatterAddRows { input: a, index }, rg))
    }

    /// Reverse-mode sweep from a scalar `loss`. Gradients add onto whatever a
    /// previous call left behind.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = &self.node(loss).shape;
        if numel(shape) != 1 {
            return Err(Error::NonScalarLoss(shape.clone()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        if !self.node(loss).requires_grad {
            return Ok(());
        }
        grads[loss.0] = Some(vec![1.0]);
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.propagate(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        for (id, g) in grads.into_iter().enumerate() {
            if let Some(g) = g {
                match &mut self.grads[id] {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, x)| *a += x),
                    slot @ None => *slot = Some(g),
                }
            }
        }
        Ok(())
    }

    fn propagate(&self, id: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[id];
        let wants = |v: Var| self.nodes[v.0].requires_grad;
        match &node.op {
            Op::Leaf => {}
            Op::Binary(op, a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let (na, nb) = (va.len(), vb.len());
                let (da, db): (fn(f64, f64) -> f64, fn(f64, f64) -> f64) = match op {
                    ElementwiseOp::Add => (|_, _| 1.0, |_, _| 1.0),
                    ElementwiseOp::Sub => (|_, _| 1.0, |_, _| -1.0),
                    _ => (|_, y| y, |x, _| x),
                };
                if wants(*a) {
                    let ga = add_into(&mut grads[a.0], na);
                    for (i, gi) in g.iter().enumerate() {
                        let (ia, ib) = (i % na, i % nb);
                        ga[ia] += gi * da(va[ia], vb[ib]);
                    }
                }
                if wants(*b) {
                    let gb = add_into(&mut grads[b.0], nb);
                    for (i, gi) in g.iter().enumerate() {
                        let (ia, ib) = (i % na, i % nb);
                        gb[ib] += gi * db(va[ia], vb[ib]);
                    }
                }
            }
            Op::Unary(op, a) => {
                if wants(*a) {
                    let x = &self.nodes[a.0].value;
                    let ga = add_into(&mut grads[a.0], x.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * unary_derivative(*op, x[i], node.value[i]);
                    }
                }
            }
            Op::Affine(a, s) => {
                let ga = add_into(&mut grads[a.0], g.len());
                ga.iter_mut().zip(g).for_each(|(d, x)| *d += s * x);
            }
            Op::MatMul(a, b) => {
                let (sa, sb) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if wants(*a) {
                    // dA = dC · Bᵀ
                    let ga = add_into(&mut grads[a.0], m * k);
                    gemm_acc(m, n, k, g, (n as isize, 1), &self.nodes[b.0].value, (1, n as isize), ga);
                }
                if wants(*b) {
                    // dB = Aᵀ · dC
                    let gb = add_into(&mut grads[b.0], k * n);
                    gemm_acc(k, m, n, &self.nodes[a.0].value, (1, k as isize), g, (n as isize, 1), gb);
                }
            }
            Op::Reduce {
                kind,
                input,
                axis,
                argmax,
            } => {
                let in_shape = &self.nodes[input.0].shape;
                let n_in = numel(in_shape);
                let gi = add_into(&mut grads[input.0], n_in);
                match (kind, axis) {
                    (ReduceOp::Max, _) => {
                        for (o, &src) in argmax.iter().enumerate() {
                            gi[src] += g[o];
                        }
                    }
                    (_, None) => {
                        let s = if *kind == ReduceOp::Mean { g[0] / n_in as f64 } else { g[0] };
                        gi.iter_mut().for_each(|x| *x += s);
                    }
                    (_, Some(ax)) => {
                        let (outer, len, inner) = split_axis(in_shape, *ax);
                        let s = if *kind == ReduceOp::Mean { 1.0 / len as f64 } else { 1.0 };
                        for o in 0..outer {
                            for l in 0..len {
                                for i in 0..inner {
                                    gi[(o * len + l) * inner + i] += s * g[o * inner + i];
                                }
                            }
                        }
                    }
                }
            }
            Op::Concat { inputs, axis } => {
                let (outer, total, inner) = split_axis(&node.shape, *axis);
                let mut offset = 0;
                for v in inputs {
                    let w = self.nodes[v.0].shape[*axis] * inner;
                    if wants(*v) {
                        let gv = add_into(&mut grads[v.0], outer * w);
                        for o in 0..outer {
                            let src = &g[o * total * inner + offset..][..w];
                            gv[o * w..(o + 1) * w]
                                .iter_mut()
                                .zip(src)
                                .for_each(|(d, s)| *d += s);
                        }
                    }
                    offset += w;
                }
            }
            Op::Narrow { input, axis, start } => {
                let in_shape = &self.nodes[input.0].shape;
                let (outer, full, inner) = split_axis(in_shape, *axis);
                let len = node.shape[*axis];
                let gi = add_into(&mut grads[input.0], numel(in_shape));
                for o in 0..outer {
                    let dst = (o * full + start) * inner;
                    gi[dst..dst + len * inner]
                        .iter_mut()
                        .zip(&g[o * len * inner..(o + 1) * len * inner])
                        .for_each(|(d, s)| *d += s);
                }
            }
            Op::Softmax { input, axis } => {
                let (outer, len, inner) = split_axis(&node.shape, *axis);
                let y = &node.value;
                let gi = add_into(&mut grads[input.0], y.len());
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |l: usize| (o * len + l) * inner + i;
                        let dot: f64 = (0..len).map(|l| g[at(l)] * y[at(l)]).sum();
                        for l in 0..len {
                            gi[at(l)] += y[at(l)] * (g[at(l)] - dot);
                        }
                    }
                }
            }
            Op::Reshape(a) => {
                let ga = add_into(&mut grads[a.0], g.len());
                ga.iter_mut().zip(g).for_each(|(d, s)| *d += s);
            }
            Op::GatherRows { input, index } => {
                let n_in = self.nodes[input.0].value.len();
                let width = g.len() / index.len().max(1);
                let gi = add_into(&mut grads[input.0], n_in);
                for (k, &r) in index.iter().enumerate() {
                    gi[r * width..(r + 1) * width]
                        .iter_mut()
                        .zip(&g[k * width..(k + 1) * width])
                        .for_each(|(d, s)| *d += s);
                }
            }
            Op::ScatterAddRows { input, index } => {
                let n_in = self.nodes[input.0].value.len();
                let width = n_in / index.len();
                let gi = add_into(&mut grads[input.0], n_in);
                for (k, &r) in index.iter().enumerate() {
                    gi[k * width..(k + 1) * width]
                        .iter_mut()
                        .zip(&g[r * width..(r + 1) * width])
                        .for_each(|(d, s)| *d += s);
                }
            }
        }
    }
}

/// First maximal `(index, value)` pair of a nonempty iterator.
fn argmax_of(mut it: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    let first = it.next().expect("reduction over an empty axis");
    it.fold(first, |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// `c = a · b` for row-major `a` (m×k) and `b` (k×n) with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
) {
    debug_assert_eq!(c.len(), m * n);
    // SAFETY: the strides address only elements inside `a` (m×k), `b` (k×n)
    // and `c` (m×n), whose lengths are checked by the callers.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c += a · b`, same conventions as [`gemm`].
#[allow(clippy::too_many_arguments)]
fn gemm_acc(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
) {
    debug_assert_eq!(c.len(), m * n);
    debug_assert!(a.len() >= m * k && b.len() >= k * n);
    // SAFETY: see `gemm`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
