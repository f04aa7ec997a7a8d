use std::cell::{Ref, RefCell};
use std::collections::BTreeMap;

use super::tensor::Tensor;
use crate::error::{config, input, Error, Result};
use crate::scalar::Scalar;

/// Index of a trainable tensor in a [`ParamStore`](crate::model::ParamStore).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddBias(usize, usize),
    Scale(usize, T),
    Relu(usize),
    LeakyRelu(usize, T),
    Sigmoid(usize),
    SoftmaxRows(usize),
    Log(usize, T),
    Pow(usize, T),
    Abs(usize),
    Sum(usize),
    Mean(usize),
    SumRows(usize),
    Concat(Vec<usize>, usize),
    Reshape(usize),
    GradReverse(usize, T),
    RowVecMat(usize, usize),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    param: Option<ParamId>,
}

/// Linear record of one forward pass.
///
/// Nodes are appended in evaluation order, so record order is a valid
/// topological order and backward simply walks it in reverse. Dropping the
/// tape frees every node; parameters live in the model and are copied in as
/// leaves on each use.
pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}", self.id)
    }
}

/// Reverse-mode gradients keyed by parameter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients<T> {
    grads: BTreeMap<ParamId, Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.grads.get(&id)
    }

    /// Gradient for `id`, or zeros shaped like `like` when the parameter was
    /// not reachable from the loss.
    pub fn get_or_zeros(&self, id: ParamId, like: &Tensor<T>) -> Tensor<T> {
        self.grads
            .get(&id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(like.shape()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.grads.iter().map(|(&k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Drops every recorded node.
    pub fn clear(&mut self) {
        self.nodes.get_mut().clear();
    }

    fn push(&self, value: Tensor<T>, op: Op<T>, param: Option<ParamId>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, param });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// Records a constant; no gradient flows into it.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, None)
    }

    pub fn scalar(&self, value: T) -> Var<'_, T> {
        self.constant(Tensor::scalar(value))
    }

    /// Records a trainable leaf. The same parameter may be recorded several
    /// times; its gradients are summed.
    pub fn param(&self, id: ParamId, value: &Tensor<T>) -> Var<'_, T> {
        self.push(value.clone(), Op::Leaf, Some(id))
    }

    fn value(&self, id: usize) -> Ref<'_, Tensor<T>> {
        Ref::map(self.nodes.borrow(), |n| &n[id].value)
    }

    /// Runs reverse accumulation from a scalar `loss`.
    ///
    /// Parameters recorded on the tape but unreachable from `loss` get zero
    /// gradients. The tape is left untouched, so repeated calls agree.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>> {
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if !root.value.is_scalar() {
            return Err(input(format!(
                "backward needs a scalar loss, got shape {:?}",
                root.value.shape()
            )));
        }

        let mut grads: Vec<Option<Tensor<T>>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(Tensor::full(root.value.shape(), T::one()));
        let mut out = Gradients::default();

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else {
                if let Some(p) = nodes[id].param {
                    out.grads
                        .entry(p)
                        .or_insert_with(|| Tensor::zeros(nodes[id].value.shape()));
                }
                continue;
            };
            let node = &nodes[id];
            if let Some(p) = node.param {
                match out.grads.get_mut(&p) {
                    Some(acc) => acc.add_assign(&g),
                    None => {
                        out.grads.insert(p, g);
                    }
                }
                continue;
            }
            propagate(&nodes, node, &g, &mut grads);
        }
        Ok(out)
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: usize, g: Tensor<T>) {
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Gradient contribution of a broadcasting elementwise operand.
fn reduce_to<T: Scalar>(g: Tensor<T>, like: &Tensor<T>) -> Tensor<T> {
    if like.numel() == g.numel() {
        g.reshaped(like.shape()).expect("same element count")
    } else {
        Tensor::new(like.shape().to_vec(), vec![g.sum()]).expect("scalar operand")
    }
}

fn propagate<T: Scalar>(
    nodes: &[Node<T>],
    node: &Node<T>,
    g: &Tensor<T>,
    grads: &mut [Option<Tensor<T>>],
) {
    let val = |i: usize| &nodes[i].value;
    match node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            accumulate(grads, a, g.matmul_bt(val(b)));
            accumulate(grads, b, val(a).matmul_at(g));
        }
        Op::Add(a, b) => {
            accumulate(grads, a, reduce_to(g.clone(), val(a)));
            accumulate(grads, b, reduce_to(g.clone(), val(b)));
        }
        Op::Sub(a, b) => {
            accumulate(grads, a, reduce_to(g.clone(), val(a)));
            accumulate(grads, b, reduce_to(g.map(|x| -x), val(b)));
        }
        Op::Mul(a, b) => {
            let (va, vb) = (val(a), val(b));
            let ga = broadcast_mul(g, vb);
            let gb = broadcast_mul(g, va);
            accumulate(grads, a, reduce_to(ga, va));
            accumulate(grads, b, reduce_to(gb, vb));
        }
        Op::AddBias(x, b) => {
            let cols = g.cols();
            let mut gb = vec![T::zero(); cols];
            for row in g.row_iter() {
                for (acc, &v) in gb.iter_mut().zip(row) {
                    *acc = *acc + v;
                }
            }
            accumulate(grads, x, g.clone());
            accumulate(grads, b, Tensor::new(val(b).shape().to_vec(), gb).unwrap());
        }
        Op::Scale(x, c) => accumulate(grads, x, g.map(|v| v * c)),
        Op::GradReverse(x, c) => accumulate(grads, x, g.map(|v| -(v * c))),
        Op::Relu(x) => {
            let d = g.zip_map(val(x), |gv, xv| if xv > T::zero() { gv } else { T::zero() });
            accumulate(grads, x, d);
        }
        Op::LeakyRelu(x, slope) => {
            let d = g.zip_map(val(x), |gv, xv| if xv > T::zero() { gv } else { gv * slope });
            accumulate(grads, x, d);
        }
        Op::Sigmoid(x) => {
            let d = g.zip_map(&node.value, |gv, y| gv * y * (T::one() - y));
            accumulate(grads, x, d);
        }
        Op::SoftmaxRows(x) => {
            let y = &node.value;
            let cols = y.cols();
            let mut d = Vec::with_capacity(y.numel());
            for (yr, gr) in y.row_iter().zip(g.row_iter()) {
                let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                d.extend(yr.iter().zip(gr).map(|(&yv, &gv)| yv * (gv - dot)));
            }
            debug_assert_eq!(d.len() % cols.max(1), 0);
            accumulate(grads, x, Tensor::new(y.shape().to_vec(), d).unwrap());
        }
        Op::Log(x, floor) => {
            let d = g.zip_map(val(x), |gv, xv| if xv > floor { gv / xv } else { T::zero() });
            accumulate(grads, x, d);
        }
        Op::Pow(x, p) => {
            let d = g.zip_map(val(x), |gv, xv| {
                if p == T::zero() || (xv == T::zero() && p < T::one()) {
                    T::zero()
                } else {
                    gv * p * powv(xv, p - T::one())
                }
            });
            accumulate(grads, x, d);
        }
        Op::Abs(x) => {
            let d = g.zip_map(val(x), |gv, xv| {
                if xv > T::zero() {
                    gv
                } else if xv < T::zero() {
                    -gv
                } else {
                    T::zero()
                }
            });
            accumulate(grads, x, d);
        }
        Op::Sum(x) => accumulate(grads, x, Tensor::full(val(x).shape(), g.item())),
        Op::Mean(x) => {
            let n = T::of(val(x).numel() as f64);
            accumulate(grads, x, Tensor::full(val(x).shape(), g.item() / n));
        }
        Op::SumRows(x) => {
            let vx = val(x);
            let cols = vx.cols();
            let mut d = Vec::with_capacity(vx.numel());
            for &gv in g.data() {
                d.extend(std::iter::repeat_n(gv, cols));
            }
            accumulate(grads, x, Tensor::new(vx.shape().to_vec(), d).unwrap());
        }
        Op::Concat(ref parts, axis) => {
            if axis == 0 {
                let mut offset = 0;
                for &p in parts {
                    let n = val(p).numel();
                    let piece = g.data()[offset..offset + n].to_vec();
                    offset += n;
                    accumulate(grads, p, Tensor::new(val(p).shape().to_vec(), piece).unwrap());
                }
            } else {
                let mut offset = 0;
                for &p in parts {
                    let c = val(p).cols();
                    let piece: Vec<T> = g
                        .row_iter()
                        .flat_map(|r| r[offset..offset + c].iter().copied())
                        .collect();
                    offset += c;
                    accumulate(grads, p, Tensor::new(val(p).shape().to_vec(), piece).unwrap());
                }
            }
        }
        Op::Reshape(x) => accumulate(grads, x, g.reshaped(val(x).shape()).unwrap()),
        Op::RowVecMat(y, t) => {
            let (vy, vt) = (val(y), val(t));
            let k = vy.cols();
            let mut dy = vec![T::zero(); vy.numel()];
            let mut dt = vec![T::zero(); vt.numel()];
            for i in 0..vy.rows() {
                let gr = g.row(i);
                let tr = vt.row(i);
                for a in 0..k {
                    let ya = vy.get(i, a);
                    let mut acc = T::zero();
                    for m in 0..k {
                        acc = acc + gr[m] * tr[a * k + m];
                        dt[i * k * k + a * k + m] = gr[m] * ya;
                    }
                    dy[i * k + a] = acc;
                }
            }
            accumulate(grads, y, Tensor::new(vy.shape().to_vec(), dy).unwrap());
            accumulate(grads, t, Tensor::new(vt.shape().to_vec(), dt).unwrap());
        }
    }
}

fn broadcast_mul<T: Scalar>(g: &Tensor<T>, other: &Tensor<T>) -> Tensor<T> {
    if other.numel() == g.numel() {
        Tensor::new(
            g.shape().to_vec(),
            g.data().iter().zip(other.data()).map(|(&a, &b)| a * b).collect(),
        )
        .unwrap()
    } else {
        let s = other.item();
        g.map(|v| v * s)
    }
}

fn powv<T: Scalar>(x: T, p: T) -> T {
    if p.fract() == T::zero() && p.abs() < T::of(i32::MAX as f64) {
        x.powi(p.to_i32().unwrap())
    } else {
        x.powf(p)
    }
}

// Binary ops return Result, so the std operator traits do not fit.
#[allow(clippy::should_implement_trait)]
impl<'t, T: Scalar> Var<'t, T> {
    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    /// Borrowed forward value. Do not hold across further ops on the tape.
    pub fn value(&self) -> Ref<'t, Tensor<T>> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    /// Scalar value of a one-element node.
    pub fn item(&self) -> T {
        self.value().item()
    }

    fn unary(self, op: Op<T>, f: impl Fn(&Tensor<T>) -> Tensor<T>) -> Var<'t, T> {
        let out = f(&self.value());
        self.tape.push(out, op, None)
    }

    fn elementwise(
        self,
        rhs: Var<'t, T>,
        name: &'static str,
        op: Op<T>,
        f: impl Fn(T, T) -> T,
    ) -> Result<Var<'t, T>> {
        let out = {
            let (a, b) = (self.value(), rhs.value());
            if a.shape() == b.shape() {
                a.zip_map(&b, &f)
            } else if b.is_scalar() {
                let s = b.item();
                a.map(|x| f(x, s))
            } else if a.is_scalar() {
                let s = a.item();
                b.map(|x| f(s, x))
            } else {
                return Err(Error::Shape {
                    op: name,
                    lhs: a.shape().to_vec(),
                    rhs: b.shape().to_vec(),
                });
            }
        };
        Ok(self.tape.push(out, op, None))
    }

    pub fn matmul(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        let out = self.value().matmul(&rhs.value())?;
        Ok(self.tape.push(out, Op::MatMul(self.id, rhs.id), None))
    }

    /// Elementwise sum; one side may be a one-element scalar.
    pub fn add(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.elementwise(rhs, "add", Op::Add(self.id, rhs.id), |a, b| a + b)
    }

    pub fn sub(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.elementwise(rhs, "sub", Op::Sub(self.id, rhs.id), |a, b| a - b)
    }

    pub fn mul(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.elementwise(rhs, "mul", Op::Mul(self.id, rhs.id), |a, b| a * b)
    }

    /// Adds a `[1, cols]` row to every row of a `[rows, cols]` matrix.
    pub fn add_bias(self, bias: Var<'t, T>) -> Result<Var<'t, T>> {
        let out = {
            let (x, b) = (self.value(), bias.value());
            if x.shape().len() != 2 || b.numel() != x.cols() || b.rows() != 1 {
                return Err(Error::Shape {
                    op: "add_bias",
                    lhs: x.shape().to_vec(),
                    rhs: b.shape().to_vec(),
                });
            }
            let cols = x.cols();
            let bd = b.data();
            let data = x
                .data()
                .iter()
                .enumerate()
                .map(|(i, &v)| v + bd[i % cols])
                .collect();
            Tensor::new(x.shape().to_vec(), data)?
        };
        Ok(self.tape.push(out, Op::AddBias(self.id, bias.id), None))
    }

    pub fn scale(self, c: T) -> Var<'t, T> {
        self.unary(Op::Scale(self.id, c), |x| x.map(|v| v * c))
    }

    pub fn neg(self) -> Var<'t, T> {
        self.scale(-T::one())
    }

    /// `c - self`
    pub fn rsub_scalar(self, c: T) -> Var<'t, T> {
        let c = self.tape.scalar(c);
        c.sub(self).expect("scalar broadcast cannot fail")
    }

    pub fn relu(self) -> Var<'t, T> {
        self.unary(Op::Relu(self.id), |x| x.map(|v| v.max(T::zero())))
    }

    pub fn leaky_relu(self, slope: T) -> Var<'t, T> {
        self.unary(Op::LeakyRelu(self.id, slope), |x| {
            x.map(|v| if v > T::zero() { v } else { v * slope })
        })
    }

    pub fn sigmoid(self) -> Var<'t, T> {
        self.unary(Op::Sigmoid(self.id), |x| x.map(sigmoid))
    }

    /// Softmax over each row, max-shifted.
    pub fn softmax_rows(self) -> Result<Var<'t, T>> {
        self.value().require_matrix("softmax_rows")?;
        Ok(self.unary(Op::SoftmaxRows(self.id), softmax_rows))
    }

    pub fn ln(self) -> Var<'t, T> {
        self.unary(Op::Log(self.id, T::neg_infinity()), |x| x.map(|v| v.ln()))
    }

    /// `ln(max(x, floor))`; values at or below the floor get no gradient.
    pub fn ln_clamped(self, floor: T) -> Var<'t, T> {
        self.unary(Op::Log(self.id, floor), |x| x.map(|v| v.max(floor).ln()))
    }

    pub fn pow(self, p: T) -> Var<'t, T> {
        self.unary(Op::Pow(self.id, p), |x| x.map(|v| powv(v, p)))
    }

    pub fn abs(self) -> Var<'t, T> {
        self.unary(Op::Abs(self.id), |x| x.map(|v| v.abs()))
    }

    pub fn sum(self) -> Var<'t, T> {
        self.unary(Op::Sum(self.id), |x| Tensor::scalar(x.sum()))
    }

    pub fn mean(self) -> Var<'t, T> {
        self.unary(Op::Mean(self.id), |x| {
            Tensor::scalar(x.sum() / T::of(x.numel() as f64))
        })
    }

    /// Row sums, `[rows, cols] -> [rows, 1]`.
    pub fn sum_rows(self) -> Result<Var<'t, T>> {
        self.value().require_matrix("sum_rows")?;
        Ok(self.unary(Op::SumRows(self.id), |x| {
            let data: Vec<T> = x.row_iter().map(|r| r.iter().copied().sum()).collect();
            Tensor::matrix(x.rows(), 1, data).unwrap()
        }))
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t, T>> {
        let out = self.value().reshaped(shape).map_err(|_| Error::Shape {
            op: "reshape",
            lhs: self.shape(),
            rhs: shape.to_vec(),
        })?;
        Ok(self.tape.push(out, Op::Reshape(self.id), None))
    }

    /// Identity forward; multiplies the incoming gradient by `-coeff`.
    pub fn grad_reverse(self, coeff: T) -> Result<Var<'t, T>> {
        if !(coeff > T::zero()) {
            return Err(config(format!("grad_reverse coefficient must be > 0, got {coeff}")));
        }
        Ok(self.unary(Op::GradReverse(self.id, coeff), Tensor::clone))
    }

    /// Per-row vector-matrix product. `self` is `[n, k]`, `mats` is `[n, k*k]`
    /// holding one row-major `k×k` matrix per row; row `i` of the output is
    /// `self[i] · mats[i]`.
    pub fn row_vec_mat(self, mats: Var<'t, T>) -> Result<Var<'t, T>> {
        let out = {
            let (y, t) = (self.value(), mats.value());
            let k = y.cols();
            if y.shape().len() != 2 || t.rows() != y.rows() || t.cols() != k * k {
                return Err(Error::Shape {
                    op: "row_vec_mat",
                    lhs: y.shape().to_vec(),
                    rhs: t.shape().to_vec(),
                });
            }
            let mut data = vec![T::zero(); y.numel()];
            for i in 0..y.rows() {
                let tr = t.row(i);
                for a in 0..k {
                    let ya = y.get(i, a);
                    for m in 0..k {
                        data[i * k + m] = data[i * k + m] + ya * tr[a * k + m];
                    }
                }
            }
            Tensor::matrix(y.rows(), k, data)?
        };
        Ok(self.tape.push(out, Op::RowVecMat(self.id, mats.id), None))
    }
}

/// Concatenates matrices along `axis` (0 stacks rows, 1 joins columns).
pub fn concat<'t, T: Scalar>(parts: &[Var<'t, T>], axis: usize) -> Result<Var<'t, T>> {
    let first = parts
        .first()
        .ok_or_else(|| input("concat of zero tensors"))?;
    let tape = first.tape;
    let out = {
        let values: Vec<Ref<'_, Tensor<T>>> = parts.iter().map(|p| p.value()).collect();
        let head = values[0].shape().to_vec();
        for v in &values {
            v.require_matrix("concat")?;
            let ok = match axis {
                0 => v.cols() == head[1],
                1 => v.rows() == head[0],
                _ => false,
            };
            if !ok {
                return Err(Error::Shape {
                    op: "concat",
                    lhs: head,
                    rhs: v.shape().to_vec(),
                });
            }
        }
        if axis == 0 {
            let rows = values.iter().map(|v| v.rows()).sum();
            let data = values.iter().flat_map(|v| v.data().iter().copied()).collect();
            Tensor::matrix(rows, head[1], data)?
        } else {
            let cols = values.iter().map(|v| v.cols()).sum();
            let mut data = Vec::with_capacity(head[0] * cols);
            for r in 0..head[0] {
                for v in &values {
                    data.extend_from_slice(v.row(r));
                }
            }
            Tensor::matrix(head[0], cols, data)?
        }
    };
    let ids = parts.iter().map(|p| p.id).collect();
    Ok(tape.push(out, Op::Concat(ids, axis), None))
}

pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn softmax_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut data = Vec::with_capacity(x.numel());
    for r in x.row_iter() {
        let max = r.iter().copied().fold(T::neg_infinity(), T::max);
        let start = data.len();
        let mut total = T::zero();
        for &v in r {
            let e = (v - max).exp();
            total = total + e;
            data.push(e);
        }
        for v in &mut data[start..] {
            *v = *v / total;
        }
    }
    Tensor::new(x.shape().to_vec(), data).unwrap()
}
