use std::cell::RefCell;
use std::sync::Arc;

use super::broadcast::{broadcast_to, reduce_to_shape, reduction_slots, zip_broadcast};
use super::{gemm, Real, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryOp {
    Relu,
    Sin,
    Cos,
    Sigmoid,
    Sqrt,
    Square,
    /// `scale * x + shift`
    Affine { scale: f64, shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    /// Population variance (divisor is the element count).
    Variance,
}

enum Op<T: Real> {
    Leaf,
    Binary(BinaryOp, usize, usize),
    Unary(UnaryOp, usize),
    MatMul {
        a: usize,
        b: usize,
        trans_a: bool,
        trans_b: bool,
        dims: (usize, usize, usize),
    },
    Reduce {
        kind: ReduceOp,
        input: usize,
        kept_shape: Vec<usize>,
        count: usize,
        mean: Option<Vec<T>>,
    },
    Reshape(usize),
    Standardize {
        input: usize,
        slots: Vec<u32>,
        units: usize,
        /// `(x − μ)/√(σ² + ε)` and `1/√(σ² + ε)` kept in double precision.
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Gather {
        table: usize,
        index: Arc<Vec<u32>>,
        weight: Arc<Vec<f64>>,
        per_query: usize,
    },
}

struct Node<T: Real> {
    value: Tensor<T>,
    op: Op<T>,
    tracked: bool,
}

/// Define-by-run operation record. Every forward pass builds a fresh tape;
/// operations are appended in execution order, so node ids are already a
/// topological order.
pub struct Tape<T: Real = f32> {
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a differentiable leaf (a parameter or an input whose
    /// gradient is wanted).
    pub fn leaf(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, true)
    }

    /// Registers a constant: no gradient flows into it.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, false)
    }

    fn push(&self, value: Tensor<T>, op: Op<T>, tracked: bool) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, tracked });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn value(&self, id: usize) -> Tensor<T> {
        self.nodes.borrow()[id].value.clone()
    }

    fn tracked(&self, id: usize) -> bool {
        self.nodes.borrow()[id].tracked
    }
}

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T: Real = f32> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T: Real> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{} {:?}", self.id, self.value())
    }
}

impl<'t, T: Real> Var<'t, T> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Tensor<T> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.tracked(self.id)
    }

    fn same_tape(&self, other: &Var<'t, T>) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::invalid("operands recorded on different tapes"))
        }
    }

    fn binary(self, op: BinaryOp, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.same_tape(&rhs)?;
        let (a, b) = (self.value(), rhs.value());
        let out = match op {
            BinaryOp::Add => zip_broadcast(&a, &b, |x, y| x + y),
            BinaryOp::Sub => zip_broadcast(&a, &b, |x, y| x - y),
            BinaryOp::Mul => zip_broadcast(&a, &b, |x, y| x * y),
            BinaryOp::Div => zip_broadcast(&a, &b, |x, y| x / y),
        }?;
        let tracked = self.requires_grad() || rhs.requires_grad();
        Ok(self.tape.push(out, Op::Binary(op, self.id, rhs.id), tracked))
    }

    pub fn add(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(BinaryOp::Add, rhs)
    }

    pub fn sub(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(BinaryOp::Sub, rhs)
    }

    pub fn mul(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(BinaryOp::Mul, rhs)
    }

    pub fn div(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(BinaryOp::Div, rhs)
    }

    pub fn unary(self, op: UnaryOp) -> Var<'t, T> {
        let a = self.value();
        let out = match op {
            UnaryOp::Relu => a.map(|x| if x > T::zero() { x } else { T::zero() }),
            UnaryOp::Sin => a.map(T::sin),
            UnaryOp::Cos => a.map(T::cos),
            UnaryOp::Sigmoid => a.map(|x| T::one() / (T::one() + (-x).exp())),
            UnaryOp::Sqrt => a.map(T::sqrt),
            UnaryOp::Square => a.map(|x| x * x),
            UnaryOp::Affine { scale, shift } => {
                let (s, b) = (T::of(scale), T::of(shift));
                a.map(|x| s * x + b)
            }
        };
        let tracked = self.requires_grad();
        self.tape.push(out, Op::Unary(op, self.id), tracked)
    }

    pub fn relu(self) -> Var<'t, T> {
        self.unary(UnaryOp::Relu)
    }

    pub fn sin(self) -> Var<'t, T> {
        self.unary(UnaryOp::Sin)
    }

    pub fn cos(self) -> Var<'t, T> {
        self.unary(UnaryOp::Cos)
    }

    pub fn sigmoid(self) -> Var<'t, T> {
        self.unary(UnaryOp::Sigmoid)
    }

    pub fn sqrt(self) -> Var<'t, T> {
        self.unary(UnaryOp::Sqrt)
    }

    pub fn square(self) -> Var<'t, T> {
        self.unary(UnaryOp::Square)
    }

    pub fn affine(self, scale: f64, shift: f64) -> Var<'t, T> {
        self.unary(UnaryOp::Affine { scale, shift })
    }

    /// Matrix product `self · rhs` of `[M×K]` and `[K×P]`.
    pub fn matmul(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.matmul_with(rhs, false, false)
    }

    /// `self · rhsᵀ` with `rhs` stored `[P×K]`, the layout of a linear
    /// layer's weight.
    pub fn matmul_t(self, rhs: Var<'t, T>) -> Result<Var<'t, T>> {
        self.matmul_with(rhs, false, true)
    }

    /// `op(self) · op(rhs)` where `op` transposes when the flag is set.
    pub fn matmul_with(self, rhs: Var<'t, T>, trans_a: bool, trans_b: bool) -> Result<Var<'t, T>> {
        self.same_tape(&rhs)?;
        let (a, b) = (self.value(), rhs.value());
        if a.rank() != 2 || b.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "matmul (rank)",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let (m, k) = if trans_a {
            (a.shape()[1], a.shape()[0])
        } else {
            (a.shape()[0], a.shape()[1])
        };
        let (k2, n) = if trans_b {
            (b.shape()[1], b.shape()[0])
        } else {
            (b.shape()[0], b.shape()[1])
        };
        if k != k2 {
            return Err(Error::ShapeMismatch {
                op: "matmul (inner dimension)",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut out = vec![T::zero(); m * n];
        gemm(m, k, n, a.data(), trans_a, b.data(), trans_b, T::zero(), &mut out);
        let tracked = self.requires_grad() || rhs.requires_grad();
        Ok(self.tape.push(
            Tensor::new(vec![m, n], out)?,
            Op::MatMul {
                a: self.id,
                b: rhs.id,
                trans_a,
                trans_b,
                dims: (m, k, n),
            },
            tracked,
        ))
    }

    /// Reduction over `axes`. Reduced axes are dropped unless `keep_dims`,
    /// in which case they stay with extent 1.
    pub fn reduce(self, kind: ReduceOp, axes: &[usize], keep_dims: bool) -> Result<Var<'t, T>> {
        let a = self.value();
        let shape = a.shape().to_vec();
        let mut axes = axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if let Some(&bad) = axes.iter().find(|&&ax| ax >= shape.len()) {
            return Err(Error::invalid(format!(
                "reduction axis {bad} out of range for shape {shape:?}"
            )));
        }
        let count: usize = axes.iter().map(|&ax| shape[ax]).product();
        if count == 0 {
            return Err(Error::InvalidShape(format!(
                "empty reduction over axes {axes:?} of shape {shape:?}"
            )));
        }
        let mut kept = shape.clone();
        for &ax in &axes {
            kept[ax] = 1;
        }
        let inv = T::one() / T::of(count as f64);
        let sums = reduce_to_shape(a.data(), &shape, &kept);
        let (values, mean) = match kind {
            ReduceOp::Sum => (sums, None),
            ReduceOp::Mean => (sums.into_iter().map(|s| s * inv).collect(), None),
            ReduceOp::Variance => {
                let mean: Vec<T> = sums.into_iter().map(|s| s * inv).collect();
                let mean_t = Tensor::new(kept.clone(), mean.clone())?;
                let sq = zip_broadcast(&a, &mean_t, |x, m| (x - m) * (x - m))?;
                let var = reduce_to_shape(sq.data(), &shape, &kept)
                    .into_iter()
                    .map(|s| s * inv)
                    .collect();
                (var, Some(mean))
            }
        };
        let out_shape = if keep_dims {
            kept.clone()
        } else {
            shape
                .iter()
                .enumerate()
                .filter(|(i, _)| !axes.contains(i))
                .map(|(_, &d)| d)
                .collect()
        };
        let tracked = self.requires_grad();
        Ok(self.tape.push(
            Tensor::new(out_shape, values)?,
            Op::Reduce {
                kind,
                input: self.id,
                kept_shape: kept,
                count,
                mean,
            },
            tracked,
        ))
    }

    pub fn sum(self, axes: &[usize], keep_dims: bool) -> Result<Var<'t, T>> {
        self.reduce(ReduceOp::Sum, axes, keep_dims)
    }

    pub fn mean(self, axes: &[usize], keep_dims: bool) -> Result<Var<'t, T>> {
        self.reduce(ReduceOp::Mean, axes, keep_dims)
    }

    pub fn variance(self, axes: &[usize], keep_dims: bool) -> Result<Var<'t, T>> {
        self.reduce(ReduceOp::Variance, axes, keep_dims)
    }

    /// Sum over every axis, producing a shape-`[]` scalar.
    pub fn sum_all(self) -> Result<Var<'t, T>> {
        let axes: Vec<usize> = (0..self.shape().len()).collect();
        self.sum(&axes, false)
    }

    pub fn mean_all(self) -> Result<Var<'t, T>> {
        let axes: Vec<usize> = (0..self.shape().len()).collect();
        self.mean(&axes, false)
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Var<'t, T>> {
        let out = self.value().reshape(shape)?;
        let tracked = self.requires_grad();
        Ok(self.tape.push(out, Op::Reshape(self.id), tracked))
    }

    /// Per-unit standardization `(x − μ) / √(σ² + ε)`, with mean and
    /// population variance taken over `axes`. Equivalent to the composition
    /// of `mean`, `variance`, `sub`, `sqrt` and `div`, but evaluated (forward
    /// and backward) in double precision: small units such as two-element
    /// rows otherwise lose their gradient to single-precision cancellation.
    pub fn standardize(self, axes: &[usize], eps: f64) -> Result<Var<'t, T>> {
        let a = self.value();
        let shape = a.shape().to_vec();
        if let Some(&bad) = axes.iter().find(|&&ax| ax >= shape.len()) {
            return Err(Error::invalid(format!(
                "standardization axis {bad} out of range for shape {shape:?}"
            )));
        }
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::invalid(format!("standardization eps must be positive, got {eps}")));
        }
        let mut kept = shape.clone();
        for &ax in axes {
            kept[ax] = 1;
        }
        let units: usize = kept.iter().product();
        let count = a.numel() / units.max(1);
        if count == 0 {
            return Err(Error::InvalidShape(format!(
                "empty standardization over axes {axes:?} of shape {shape:?}"
            )));
        }
        let slots = reduction_slots(&shape, &kept);
        let inv = 1.0 / count as f64;
        let mut mean = vec![0.0f64; units];
        for (&x, &u) in a.data().iter().zip(&slots) {
            mean[u as usize] += x.f64();
        }
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut var = vec![0.0f64; units];
        for (&x, &u) in a.data().iter().zip(&slots) {
            let c = x.f64() - mean[u as usize];
            var[u as usize] += c * c;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v * inv + eps).sqrt()).collect();
        let xhat: Vec<f64> = a
            .data()
            .iter()
            .zip(&slots)
            .map(|(&x, &u)| (x.f64() - mean[u as usize]) * inv_std[u as usize])
            .collect();
        let out = Tensor::new(shape, xhat.iter().map(|&v| T::of(v)).collect())?;
        let tracked = self.requires_grad();
        Ok(self.tape.push(
            out,
            Op::Standardize {
                input: self.id,
                slots,
                units,
                xhat,
                inv_std,
            },
            tracked,
        ))
    }

    /// Sparse weighted row gather from a `[rows × k]` table:
    /// `out[q, c] = Σ_j weight[q·P + j] · table[index[q·P + j], c]` with `P =
    /// per_query`. This is the interpolation primitive behind modulation
    /// grids; its gradient scatters the same weights back into the table.
    pub fn gather_weighted(
        self,
        index: Arc<Vec<u32>>,
        weight: Arc<Vec<f64>>,
        per_query: usize,
    ) -> Result<Var<'t, T>> {
        let table = self.value();
        if table.rank() != 2 {
            return Err(Error::InvalidShape(format!(
                "gather table must be [rows × k], got {:?}",
                table.shape()
            )));
        }
        if per_query == 0 || index.len() != weight.len() || !index.len().is_multiple_of(per_query) {
            return Err(Error::invalid("gather index/weight layout is inconsistent"));
        }
        let (rows, k) = (table.shape()[0], table.shape()[1]);
        if let Some(&bad) = index.iter().find(|&&i| i as usize >= rows) {
            return Err(Error::invalid(format!("gather row {bad} out of range for {rows}")));
        }
        let q = index.len() / per_query;
        let td = table.data();
        let mut out = vec![T::zero(); q * k];
        let mut acc = vec![0.0f64; k];
        for (n, dst) in out.chunks_exact_mut(k.max(1)).enumerate().take(q) {
            acc.fill(0.0);
            for j in 0..per_query {
                let w = weight[n * per_query + j];
                if w == 0.0 {
                    continue;
                }
                let r = index[n * per_query + j] as usize;
                for (d, &v) in acc.iter_mut().zip(&td[r * k..(r + 1) * k]) {
                    *d += w * v.f64();
                }
            }
            for (d, &a) in dst.iter_mut().zip(&acc) {
                *d = T::of(a);
            }
        }
        let tracked = self.requires_grad();
        Ok(self.tape.push(
            Tensor::new(vec![q, k], out)?,
            Op::Gather {
                table: self.id,
                index,
                weight,
                per_query,
            },
            tracked,
        ))
    }

    /// Reverse sweep from a scalar root. Returns gradients for every tracked
    /// leaf reachable from the root.
    pub fn backward(self) -> Result<Gradients<T>> {
        let nodes = self.tape.nodes.borrow();
        let root = &nodes[self.id];
        if root.value.numel() != 1 {
            return Err(Error::InvalidShape(format!(
                "backward needs a scalar root, got shape {:?}",
                root.value.shape()
            )));
        }
        if !root.tracked {
            return Err(Error::invalid("backward root does not depend on any tracked leaf"));
        }
        let mut grads: Vec<Option<Vec<T>>> = Vec::new();
        grads.resize_with(self.id + 1, || None);
        let mut leaves: Vec<Option<Tensor<T>>> = Vec::new();
        leaves.resize_with(self.id + 1, || None);
        grads[self.id] = Some(vec![T::one()]);

        for id in (0..=self.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.tracked {
                continue;
            }
            let shape = node.value.shape();
            match &node.op {
                Op::Leaf => {
                    leaves[id] = Some(Tensor::new(shape.to_vec(), g)?);
                }
                Op::Binary(op, a, b) => {
                    let (na, nb) = (&nodes[*a], &nodes[*b]);
                    let (av, bv) = (&na.value, &nb.value);
                    let gt = Tensor::new(shape.to_vec(), g)?;
                    if na.tracked {
                        let full = match op {
                            BinaryOp::Add | BinaryOp::Sub => gt.clone(),
                            BinaryOp::Mul => zip_broadcast(&gt, bv, |g, y| g * y)?,
                            BinaryOp::Div => zip_broadcast(&gt, bv, |g, y| g / y)?,
                        };
                        accumulate(&mut grads, *a, reduce_to_shape(full.data(), shape, av.shape()));
                    }
                    if nb.tracked {
                        let full = match op {
                            BinaryOp::Add => gt.clone(),
                            BinaryOp::Sub => gt.map(|g| -g),
                            BinaryOp::Mul => zip_broadcast(&gt, av, |g, x| g * x)?,
                            BinaryOp::Div => {
                                // ∂(a/b)/∂b = −a/b²
                                let q = zip_broadcast(av, bv, |x, y| x / (y * y))?;
                                zip_broadcast(&gt, &q, |g, q| -g * q)?
                            }
                        };
                        accumulate(&mut grads, *b, reduce_to_shape(full.data(), shape, bv.shape()));
                    }
                }
                Op::Unary(op, a) => {
                    let x = nodes[*a].value.data();
                    let y = node.value.data();
                    let ga: Vec<T> = match *op {
                        UnaryOp::Relu => g
                            .iter()
                            .zip(x)
                            .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
                            .collect(),
                        UnaryOp::Sin => g.iter().zip(x).map(|(&g, &x)| g * x.cos()).collect(),
                        UnaryOp::Cos => g.iter().zip(x).map(|(&g, &x)| -g * x.sin()).collect(),
                        UnaryOp::Sigmoid => g
                            .iter()
                            .zip(y)
                            .map(|(&g, &y)| g * y * (T::one() - y))
                            .collect(),
                        UnaryOp::Sqrt => {
                            let half = T::of(0.5);
                            g.iter().zip(y).map(|(&g, &y)| g * half / y).collect()
                        }
                        UnaryOp::Square => {
                            let two = T::of(2.0);
                            g.iter().zip(x).map(|(&g, &x)| two * x * g).collect()
                        }
                        UnaryOp::Affine { scale, .. } => {
                            let s = T::of(scale);
                            g.iter().map(|&g| g * s).collect()
                        }
                    };
                    accumulate(&mut grads, *a, ga);
                }
                Op::MatMul {
                    a,
                    b,
                    trans_a,
                    trans_b,
                    dims: (m, k, n),
                } => {
                    let (m, k, n) = (*m, *k, *n);
                    let (na, nb) = (&nodes[*a], &nodes[*b]);
                    let (ad, bd) = (na.value.data(), nb.value.data());
                    if na.tracked {
                        let mut da = vec![T::zero(); m * k];
                        if *trans_a {
                            gemm(k, n, m, bd, *trans_b, &g, true, T::zero(), &mut da);
                        } else {
                            gemm(m, n, k, &g, false, bd, !*trans_b, T::zero(), &mut da);
                        }
                        accumulate(&mut grads, *a, da);
                    }
                    if nb.tracked {
                        let mut db = vec![T::zero(); k * n];
                        if *trans_b {
                            gemm(n, m, k, &g, true, ad, *trans_a, T::zero(), &mut db);
                        } else {
                            gemm(k, m, n, ad, !*trans_a, &g, false, T::zero(), &mut db);
                        }
                        accumulate(&mut grads, *b, db);
                    }
                }
                Op::Reduce {
                    kind,
                    input,
                    kept_shape,
                    count,
                    mean,
                } => {
                    let in_shape = nodes[*input].value.shape();
                    let inv = T::one() / T::of(*count as f64);
                    let spread = broadcast_to(&g, kept_shape, in_shape);
                    let ga = match kind {
                        ReduceOp::Sum => spread,
                        ReduceOp::Mean => spread.into_iter().map(|g| g * inv).collect(),
                        ReduceOp::Variance => {
                            let mean = mean.as_ref().expect("variance keeps its mean");
                            let centred = zip_broadcast(
                                &nodes[*input].value,
                                &Tensor::new(kept_shape.clone(), mean.clone())?,
                                |x, m| x - m,
                            )?;
                            let two_inv = T::of(2.0) * inv;
                            spread
                                .iter()
                                .zip(centred.data())
                                .map(|(&g, &c)| g * two_inv * c)
                                .collect()
                        }
                    };
                    accumulate(&mut grads, *input, ga);
                }
                Op::Reshape(a) => accumulate(&mut grads, *a, g),
                Op::Standardize {
                    input,
                    slots,
                    units,
                    xhat,
                    inv_std,
                } => {
                    // dx = (g − mean(g) − x̂ · mean(g x̂)) / √(σ² + ε)
                    let count = (g.len() / (*units).max(1)) as f64;
                    let mut mg = vec![0.0f64; *units];
                    let mut mgx = vec![0.0f64; *units];
                    for ((&gv, &xh), &u) in g.iter().zip(xhat).zip(slots) {
                        mg[u as usize] += gv.f64();
                        mgx[u as usize] += gv.f64() * xh;
                    }
                    let ga = g
                        .iter()
                        .zip(xhat)
                        .zip(slots)
                        .map(|((&gv, &xh), &u)| {
                            let u = u as usize;
                            T::of((gv.f64() - mg[u] / count - xh * mgx[u] / count) * inv_std[u])
                        })
                        .collect();
                    accumulate(&mut grads, *input, ga);
                }
                Op::Gather {
                    table,
                    index,
                    weight,
                    per_query,
                } => {
                    let ts = nodes[*table].value.shape();
                    let k = ts[1];
                    let mut gt = vec![0.0f64; ts[0] * k];
                    for (n, gq) in g.chunks_exact(k.max(1)).enumerate() {
                        for j in 0..*per_query {
                            let w = weight[n * per_query + j];
                            if w == 0.0 {
                                continue;
                            }
                            let r = index[n * per_query + j] as usize;
                            for (d, &gv) in gt[r * k..(r + 1) * k].iter_mut().zip(gq) {
                                *d += w * gv.f64();
                            }
                        }
                    }
                    accumulate(&mut grads, *table, gt.into_iter().map(T::of).collect());
                }
            }
        }
        Ok(Gradients { leaves })
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Vec<T>>], id: usize, g: Vec<T>) {
    match &mut grads[id] {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, g)| *a = *a + g),
        slot @ None => *slot = Some(g),
    }
}

/// Leaf gradients produced by [`Var::backward`].
pub struct Gradients<T: Real = f32> {
    leaves: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for a leaf; `None` when the root does not depend on it.
    pub fn get(&self, v: &Var<'_, T>) -> Option<&Tensor<T>> {
        self.leaves.get(v.id).and_then(Option::as_ref)
    }

    /// Like [`Gradients::get`], but a leaf the root does not reach gets a
    /// zero gradient of the right shape.
    pub fn get_or_zero(&self, v: &Var<'_, T>) -> Tensor<T> {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(v.shape()))
    }
}
