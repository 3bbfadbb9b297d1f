use super::ops::{BinaryOp, UnaryOp};
use super::{dot, Scalar, Shape, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Unary(Var, UnaryOp),
    Binary(Var, Var, BinaryOp),
    MatVec {
        w: Var,
        x: Var,
    },
    Concat(Vec<Var>),
    Softmax {
        x: Var,
        mask: Option<Vec<bool>>,
    },
    WeightedSum {
        weights: Var,
        vectors: Vec<Var>,
    },
    MaxPool {
        vectors: Vec<Var>,
        argmax: Vec<usize>,
    },
    Grl(Var),
    ScaleBy {
        x: Var,
        factors: Vec<T>,
    },
    Sum(Var),
    Pick {
        x: Var,
        index: usize,
    },
    ClampMin {
        x: Var,
        floor: T,
    },
}

#[derive(Debug)]
struct Node<T> {
    shape: Shape,
    value: Vec<T>,
    requires_grad: bool,
    op: Op<T>,
}

/// Records a forward computation for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so every node's inputs precede it
/// and [`Tape::backward`] can walk the node list back to front.
#[derive(Debug)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    fault: Option<&'static str>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            fault: None,
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: Vec::with_capacity(n),
            fault: None,
        }
    }

    /// Corrupts the backward rule of the named unary op. Only used by the
    /// gradient-check negative control.
    #[doc(hidden)]
    pub fn inject_fault(&mut self, op: &'static str) {
        self.fault = Some(op);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape, n.value.clone())
    }

    /// First element of a node, for scalar results.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value[0]
    }

    fn push(&mut self, shape: Shape, value: Vec<T>, requires_grad: bool, op: Op<T>) -> Var {
        debug_assert_eq!(shape.len(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn req(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A differentiable input.
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        let shape = t.shape();
        self.push(shape, t.into_data(), true, Op::Leaf)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        let shape = t.shape();
        self.push(shape, t.into_data(), false, Op::Leaf)
    }

    pub fn unary(&mut self, x: Var, op: UnaryOp) -> Result<Var> {
        let node = &self.nodes[x.0];
        if op == UnaryOp::Log {
            if let Some((index, &value)) = node
                .value
                .iter()
                .enumerate()
                .find(|(_, &v)| v.is_nan() || v <= T::zero())
            {
                return Err(Error::Domain {
                    op: "log",
                    index,
                    value: value.as_f64(),
                });
            }
        }
        let value = node.value.iter().map(|&v| op.forward(v)).collect();
        let (shape, req) = (node.shape, node.requires_grad);
        Ok(self.push(shape, value, req, Op::Unary(x, op)))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, UnaryOp::Tanh).expect("tanh is total")
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, UnaryOp::Sigmoid).expect("sigmoid is total")
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, UnaryOp::Relu).expect("relu is total")
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, UnaryOp::Exp).expect("exp is total")
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        self.unary(x, UnaryOp::Log)
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.unary(x, UnaryOp::Negate).expect("negate is total")
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, UnaryOp::Scale(c)).expect("scale is total")
    }

    pub fn binary(&mut self, a: Var, b: Var, op: BinaryOp) -> Result<Var> {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        if na.shape != nb.shape {
            return Err(Error::Shape {
                op: op.name(),
                lhs: na.shape,
                rhs: nb.shape,
            });
        }
        let value = na
            .value
            .iter()
            .zip(&nb.value)
            .map(|(&x, &y)| op.forward(x, y))
            .collect();
        let (shape, req) = (na.shape, na.requires_grad || nb.requires_grad);
        Ok(self.push(shape, value, req, Op::Binary(a, b, op)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryOp::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryOp::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryOp::Mul)
    }

    /// Matrix-vector product `w · x`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (nw, nx) = (&self.nodes[w.0], &self.nodes[x.0]);
        let (rows, cols) = match (nw.shape, nx.shape) {
            (Shape::Matrix(r, c), Shape::Vector(n)) if c == n => (r, c),
            _ => {
                return Err(Error::Shape {
                    op: "matvec",
                    lhs: nw.shape,
                    rhs: nx.shape,
                })
            }
        };
        let value = (0..rows)
            .map(|r| dot(&nw.value[r * cols..(r + 1) * cols], &nx.value))
            .collect();
        let req = nw.requires_grad || nx.requires_grad;
        Ok(self.push(Shape::Vector(rows), value, req, Op::MatVec { w, x }))
    }

    fn vector_len(&self, op: &'static str, v: Var) -> Result<usize> {
        match self.nodes[v.0].shape {
            Shape::Vector(n) => Ok(n),
            other => Err(Error::Shape {
                op,
                lhs: other,
                rhs: Shape::Vector(other.len()),
            }),
        }
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::argument("concat", "no parts to concatenate"));
        }
        let mut value = Vec::new();
        let mut req = false;
        for &p in parts {
            self.vector_len("concat", p)?;
            let n = &self.nodes[p.0];
            value.extend_from_slice(&n.value);
            req |= n.requires_grad;
        }
        Ok(self.push(
            Shape::Vector(value.len()),
            value,
            req,
            Op::Concat(parts.to_vec()),
        ))
    }

    /// Numerically stable softmax. Masked-out positions (mask entry
    /// `false`) produce exactly zero and receive no gradient.
    pub fn softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let n = self.vector_len("softmax", x)?;
        if let Some(m) = mask {
            if m.len() != n {
                return Err(Error::Shape {
                    op: "softmax",
                    lhs: Shape::Vector(n),
                    rhs: Shape::Vector(m.len()),
                });
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::argument("softmax", "every position is masked"));
            }
        }
        if n == 0 {
            return Err(Error::argument("softmax", "empty input"));
        }
        let keep = |i: usize| mask.is_none_or(|m| m[i]);
        let xs = &self.nodes[x.0].value;
        let max = (0..n)
            .filter(|&i| keep(i))
            .map(|i| xs[i])
            .fold(T::neg_infinity(), T::max);
        let mut value: Vec<T> = (0..n)
            .map(|i| {
                if keep(i) {
                    (xs[i] - max).exp()
                } else {
                    T::zero()
                }
            })
            .collect();
        let total: T = value.iter().copied().sum();
        for v in value.iter_mut() {
            *v = *v / total;
        }
        let req = self.req(x);
        Ok(self.push(
            Shape::Vector(n),
            value,
            req,
            Op::Softmax {
                x,
                mask: mask.map(<[bool]>::to_vec),
            },
        ))
    }

    /// `Σᵢ weights[i] · vectors[i]`.
    pub fn weighted_sum(&mut self, weights: Var, vectors: &[Var]) -> Result<Var> {
        let count = self.vector_len("weighted_sum", weights)?;
        if count != vectors.len() {
            return Err(Error::Shape {
                op: "weighted_sum",
                lhs: Shape::Vector(count),
                rhs: Shape::Vector(vectors.len()),
            });
        }
        let Some(&first) = vectors.first() else {
            return Err(Error::argument("weighted_sum", "no vectors"));
        };
        let dim = self.vector_len("weighted_sum", first)?;
        let mut value = vec![T::zero(); dim];
        let mut req = self.req(weights);
        for (i, &v) in vectors.iter().enumerate() {
            let nv = &self.nodes[v.0];
            if nv.shape != Shape::Vector(dim) {
                return Err(Error::Shape {
                    op: "weighted_sum",
                    lhs: Shape::Vector(dim),
                    rhs: nv.shape,
                });
            }
            let w = self.nodes[weights.0].value[i];
            for (o, &h) in value.iter_mut().zip(&nv.value) {
                *o = *o + w * h;
            }
            req |= nv.requires_grad;
        }
        Ok(self.push(
            Shape::Vector(dim),
            value,
            req,
            Op::WeightedSum {
                weights,
                vectors: vectors.to_vec(),
            },
        ))
    }

    /// Coordinatewise maximum over the unmasked vectors. Ties go to the
    /// earliest position, which is also the only one receiving gradient.
    pub fn max_pool(&mut self, vectors: &[Var], mask: Option<&[bool]>) -> Result<Var> {
        let Some(&first) = vectors.first() else {
            return Err(Error::argument("max_pool", "no vectors"));
        };
        if let Some(m) = mask {
            if m.len() != vectors.len() {
                return Err(Error::Shape {
                    op: "max_pool",
                    lhs: Shape::Vector(vectors.len()),
                    rhs: Shape::Vector(m.len()),
                });
            }
        }
        let keep = |i: usize| mask.is_none_or(|m| m[i]);
        let dim = self.vector_len("max_pool", first)?;
        let mut value = vec![T::neg_infinity(); dim];
        let mut argmax = vec![usize::MAX; dim];
        let mut req = false;
        for (pos, &v) in vectors.iter().enumerate() {
            let nv = &self.nodes[v.0];
            if nv.shape != Shape::Vector(dim) {
                return Err(Error::Shape {
                    op: "max_pool",
                    lhs: Shape::Vector(dim),
                    rhs: nv.shape,
                });
            }
            if !keep(pos) {
                continue;
            }
            req |= nv.requires_grad;
            for k in 0..dim {
                if argmax[k] == usize::MAX || nv.value[k] > value[k] {
                    value[k] = nv.value[k];
                    argmax[k] = pos;
                }
            }
        }
        if dim > 0 && argmax[0] == usize::MAX {
            return Err(Error::argument("max_pool", "every position is masked"));
        }
        Ok(self.push(
            Shape::Vector(dim),
            value,
            req,
            Op::MaxPool {
                vectors: vectors.to_vec(),
                argmax,
            },
        ))
    }

    /// Gradient reversal: identity forward, negated gradient backward.
    pub fn grl(&mut self, x: Var) -> Var {
        let n = &self.nodes[x.0];
        let (shape, value, req) = (n.shape, n.value.clone(), n.requires_grad);
        self.push(shape, value, req, Op::Grl(x))
    }

    /// Elementwise product with constant factors (dropout masks).
    pub fn scale_by(&mut self, x: Var, factors: Vec<T>) -> Result<Var> {
        let n = &self.nodes[x.0];
        if factors.len() != n.value.len() {
            return Err(Error::Shape {
                op: "scale_by",
                lhs: n.shape,
                rhs: Shape::Vector(factors.len()),
            });
        }
        let value = n.value.iter().zip(&factors).map(|(&a, &f)| a * f).collect();
        let (shape, req) = (n.shape, n.requires_grad);
        Ok(self.push(shape, value, req, Op::ScaleBy { x, factors }))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let n = &self.nodes[x.0];
        let total = n.value.iter().copied().sum();
        let req = n.requires_grad;
        self.push(Shape::SCALAR, vec![total], req, Op::Sum(x))
    }

    /// Selects one element as a scalar.
    pub fn pick(&mut self, x: Var, index: usize) -> Result<Var> {
        let n = &self.nodes[x.0];
        let Some(&v) = n.value.get(index) else {
            return Err(Error::argument(
                "pick",
                format!("index {index} out of range for {}", n.shape),
            ));
        };
        let req = n.requires_grad;
        Ok(self.push(Shape::SCALAR, vec![v], req, Op::Pick { x, index }))
    }

    /// `max(x, floor)` elementwise; gradient passes only where `x > floor`.
    pub fn clamp_min(&mut self, x: Var, floor: T) -> Var {
        let n = &self.nodes[x.0];
        let value = n.value.iter().map(|&v| v.max(floor)).collect();
        let (shape, req) = (n.shape, n.requires_grad);
        self.push(shape, value, req, Op::ClampMin { x, floor })
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        let root_shape = self.nodes[root.0].shape;
        if !root_shape.is_scalar() {
            return Err(Error::argument(
                "backward",
                format!("root must be a scalar, got {root_shape}"),
            ));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; root.0 + 1];
        if self.nodes[root.0].requires_grad {
            grads[root.0] = Some(vec![T::one()]);
        }
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.propagate(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        let lens = self.nodes.iter().map(|n| n.value.len()).collect();
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads, lens })
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<T>>], v: Var) -> Option<&'g mut Vec<T>> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        Some(grads[v.0].get_or_insert_with(|| vec![T::zero(); node.value.len()]))
    }

    fn propagate(&self, id: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::Unary(x, op) => {
                let xv = &self.nodes[x.0].value;
                let faulty = self.fault == Some(op.name());
                if let Some(gx) = self.slot(grads, *x) {
                    for i in 0..g.len() {
                        let mut d = op.derivative(xv[i], node.value[i]);
                        if faulty {
                            d = d * T::of(1.5);
                        }
                        gx[i] = gx[i] + g[i] * d;
                    }
                }
            }
            Op::Binary(a, b, op) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                if let Some(ga) = self.slot(grads, *a) {
                    match op {
                        BinaryOp::Add | BinaryOp::Sub => {
                            for i in 0..g.len() {
                                ga[i] = ga[i] + g[i];
                            }
                        }
                        BinaryOp::Mul => {
                            for i in 0..g.len() {
                                ga[i] = ga[i] + g[i] * bv[i];
                            }
                        }
                    }
                }
                if let Some(gb) = self.slot(grads, *b) {
                    match op {
                        BinaryOp::Add => {
                            for i in 0..g.len() {
                                gb[i] = gb[i] + g[i];
                            }
                        }
                        BinaryOp::Sub => {
                            for i in 0..g.len() {
                                gb[i] = gb[i] - g[i];
                            }
                        }
                        BinaryOp::Mul => {
                            for i in 0..g.len() {
                                gb[i] = gb[i] + g[i] * av[i];
                            }
                        }
                    }
                }
            }
            Op::MatVec { w, x } => {
                let Shape::Matrix(rows, cols) = self.nodes[w.0].shape else {
                    unreachable!("matvec weight is a matrix")
                };
                let wv = &self.nodes[w.0].value;
                let xv = &self.nodes[x.0].value;
                if let Some(gw) = self.slot(grads, *w) {
                    for r in 0..rows {
                        let gr = g[r];
                        if gr == T::zero() {
                            continue;
                        }
                        let row = &mut gw[r * cols..(r + 1) * cols];
                        for (o, &xc) in row.iter_mut().zip(xv) {
                            *o = *o + gr * xc;
                        }
                    }
                }
                if let Some(gx) = self.slot(grads, *x) {
                    for r in 0..rows {
                        let gr = g[r];
                        if gr == T::zero() {
                            continue;
                        }
                        let row = &wv[r * cols..(r + 1) * cols];
                        for (o, &wc) in gx.iter_mut().zip(row) {
                            *o = *o + gr * wc;
                        }
                    }
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.nodes[p.0].value.len();
                    if let Some(gp) = self.slot(grads, p) {
                        for (o, &gi) in gp.iter_mut().zip(&g[offset..offset + n]) {
                            *o = *o + gi;
                        }
                    }
                    offset += n;
                }
            }
            Op::Softmax { x, mask } => {
                let y = &node.value;
                let inner: T = g.iter().zip(y).map(|(&gi, &yi)| gi * yi).sum();
                if let Some(gx) = self.slot(grads, *x) {
                    for i in 0..g.len() {
                        if mask.as_ref().is_none_or(|m| m[i]) {
                            gx[i] = gx[i] + y[i] * (g[i] - inner);
                        }
                    }
                }
            }
            Op::WeightedSum { weights, vectors } => {
                let wv = self.nodes[weights.0].value.clone();
                if self.req(*weights) {
                    let contrib: Vec<T> = vectors
                        .iter()
                        .map(|v| dot(g, &self.nodes[v.0].value))
                        .collect();
                    let gw = self.slot(grads, *weights).expect("requires grad");
                    for (o, c) in gw.iter_mut().zip(contrib) {
                        *o = *o + c;
                    }
                }
                for (i, &v) in vectors.iter().enumerate() {
                    if let Some(gv) = self.slot(grads, v) {
                        for (o, &gi) in gv.iter_mut().zip(g) {
                            *o = *o + wv[i] * gi;
                        }
                    }
                }
            }
            Op::MaxPool { vectors, argmax } => {
                for (k, &pos) in argmax.iter().enumerate() {
                    if let Some(gv) = self.slot(grads, vectors[pos]) {
                        gv[k] = gv[k] + g[k];
                    }
                }
            }
            Op::Grl(x) => {
                if let Some(gx) = self.slot(grads, *x) {
                    for (o, &gi) in gx.iter_mut().zip(g) {
                        *o = *o - gi;
                    }
                }
            }
            Op::ScaleBy { x, factors } => {
                if let Some(gx) = self.slot(grads, *x) {
                    for i in 0..g.len() {
                        gx[i] = gx[i] + g[i] * factors[i];
                    }
                }
            }
            Op::Sum(x) => {
                if let Some(gx) = self.slot(grads, *x) {
                    for o in gx.iter_mut() {
                        *o = *o + g[0];
                    }
                }
            }
            Op::Pick { x, index } => {
                if let Some(gx) = self.slot(grads, *x) {
                    gx[*index] = gx[*index] + g[0];
                }
            }
            Op::ClampMin { x, floor } => {
                let xv = &self.nodes[x.0].value;
                if let Some(gx) = self.slot(grads, *x) {
                    for i in 0..g.len() {
                        if xv[i] > *floor {
                            gx[i] = gx[i] + g[i];
                        }
                    }
                }
            }
        }
    }
}

/// Result of a backward sweep: one gradient buffer per reachable node.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    lens: Vec<usize>,
}

impl<T: Scalar> Gradients<T> {
    /// `None` when the node was not reached from the root.
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient of `v`, zero-filled when unreachable.
    pub fn wrt(&self, v: Var) -> Vec<T> {
        self.get(v)
            .map(<[T]>::to_vec)
            .unwrap_or_else(|| vec![T::zero(); self.lens[v.0]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec64(t: &mut Tape<f64>, xs: &[f64]) -> Var {
        t.leaf(Tensor::vector(xs.to_vec()))
    }

    #[test]
    fn unary_examples() {
        let mut t = Tape::<f64>::new();
        let z = vec64(&mut t, &[0.0]);
        let a = t.tanh(z);
        let b = t.sigmoid(z);
        assert_eq!(t.value(a), &[0.0]);
        assert_eq!(t.value(b), &[0.5]);
        let x = vec64(&mut t, &[-1.0, 2.0]);
        let r = t.relu(x);
        assert_eq!(t.value(r), &[0.0, 2.0]);
    }

    #[test]
    fn log_rejects_non_positive() {
        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[1.0, 0.0, 2.0]);
        match t.log(x) {
            Err(Error::Domain { op, index, .. }) => {
                assert_eq!(op, "log");
                assert_eq!(index, 1);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn binary_examples_and_shape_error() {
        let mut t = Tape::<f64>::new();
        let a = vec64(&mut t, &[1.0, 2.0]);
        let b = vec64(&mut t, &[3.0, 4.0]);
        let s = t.add(a, b).unwrap();
        assert_eq!(t.value(s), &[4.0, 6.0]);
        let c = vec64(&mut t, &[2.0, 3.0]);
        let d = vec64(&mut t, &[0.0, 1.0]);
        let m = t.mul(c, d).unwrap();
        assert_eq!(t.value(m), &[0.0, 3.0]);
        let e = vec64(&mut t, &[1.0, 1.0]);
        let z = t.sub(e, e).unwrap();
        assert_eq!(t.value(z), &[0.0, 0.0]);
        let short = vec64(&mut t, &[1.0]);
        let err = t.add(a, short).unwrap_err();
        assert!(err.to_string().contains("[2]") && err.to_string().contains("[1]"));
    }

    #[test]
    fn matvec_examples() {
        let mut t = Tape::<f64>::new();
        let w = t.leaf(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]));
        let x = vec64(&mut t, &[1.0, 1.0]);
        let y = t.matvec(w, x).unwrap();
        assert_eq!(t.value(y), &[3.0, 7.0]);
        let eye = t.leaf(Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]));
        let x2 = vec64(&mut t, &[5.0, -5.0]);
        let y2 = t.matvec(eye, x2).unwrap();
        assert_eq!(t.value(y2), &[5.0, -5.0]);
        let zero = t.leaf(Tensor::zeros(Shape::Matrix(2, 2)));
        let x3 = vec64(&mut t, &[9.0, 9.0]);
        let y3 = t.matvec(zero, x3).unwrap();
        assert_eq!(t.value(y3), &[0.0, 0.0]);
        let x4 = vec64(&mut t, &[1.0, 1.0, 1.0]);
        assert!(matches!(t.matvec(w, x4), Err(Error::Shape { .. })));
    }

    #[test]
    fn concat_examples() {
        let mut t = Tape::<f64>::new();
        let a = vec64(&mut t, &[1.0]);
        let b = vec64(&mut t, &[2.0, 3.0]);
        let c = t.concat(&[a, b]).unwrap();
        assert_eq!(t.value(c), &[1.0, 2.0, 3.0]);
        let single = t.concat(&[b]).unwrap();
        assert_eq!(t.value(single), t.value(b));
        assert!(matches!(t.concat(&[]), Err(Error::Argument { .. })));
    }

    #[test]
    fn softmax_examples() {
        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[0.0, 0.0, 0.0]);
        let y = t.softmax(x, None).unwrap();
        for &v in t.value(y) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        // exp(0)=1, exp(ln 3)=3 → [1/4, 3/4]
        let x = vec64(&mut t, &[0.0, 3f64.ln()]);
        let y = t.softmax(x, None).unwrap();
        assert!((t.value(y)[0] - 0.25).abs() < 1e-15);
        assert!((t.value(y)[1] - 0.75).abs() < 1e-15);
        let x = vec64(&mut t, &[5.0, 1.0]);
        let y = t.softmax(x, Some(&[true, false])).unwrap();
        assert_eq!(t.value(y), &[1.0, 0.0]);
        assert!(t.softmax(x, Some(&[false, false])).is_err());
    }

    #[test]
    fn softmax_large_logits_stay_finite() {
        let mut t = Tape::<f32>::new();
        let x = t.leaf(Tensor::vector(vec![1000.0, 999.0, -1000.0]));
        let y = t.softmax(x, None).unwrap();
        assert!(t.value(y).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn masked_softmax_leaks_no_gradient() {
        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[0.3, -0.2, 0.9]);
        let y = t.softmax(x, Some(&[true, false, true])).unwrap();
        let w = t.constant(Tensor::vector(vec![1.0, 5.0, -2.0]));
        let p = t.mul(y, w).unwrap();
        let root = t.sum(p);
        let g = t.backward(root).unwrap();
        assert_eq!(g.wrt(x)[1], 0.0);
        assert_eq!(t.value(y)[1], 0.0);
    }

    #[test]
    fn weighted_sum_examples() {
        let mut t = Tape::<f64>::new();
        let w = vec64(&mut t, &[1.0]);
        let v = vec64(&mut t, &[2.0, 3.0]);
        let s = t.weighted_sum(w, &[v]).unwrap();
        assert_eq!(t.value(s), &[2.0, 3.0]);
        let w = vec64(&mut t, &[0.5, 0.5]);
        let a = vec64(&mut t, &[0.0, 2.0]);
        let b = vec64(&mut t, &[2.0, 0.0]);
        let s = t.weighted_sum(w, &[a, b]).unwrap();
        assert_eq!(t.value(s), &[1.0, 1.0]);
        let w = vec64(&mut t, &[0.0, 1.0]);
        let a = vec64(&mut t, &[9.0, 9.0]);
        let b = vec64(&mut t, &[1.0, 2.0]);
        let s = t.weighted_sum(w, &[a, b]).unwrap();
        assert_eq!(t.value(s), &[1.0, 2.0]);
        assert!(matches!(t.weighted_sum(w, &[a]), Err(Error::Shape { .. })));
    }

    #[test]
    fn backward_examples() {
        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[3.0]);
        let sq = t.mul(x, x).unwrap();
        let root = t.sum(sq);
        assert_eq!(t.backward(root).unwrap().wrt(x), vec![6.0]);

        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[1.0, 2.0]);
        let c = t.constant(Tensor::scalar(4.0));
        let g = t.backward(c).unwrap();
        assert_eq!(g.wrt(x), vec![0.0, 0.0]);

        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[0.0]);
        let y = t.tanh(x);
        assert_eq!(t.backward(y).unwrap().wrt(x), vec![1.0]);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[1.0, 2.0]);
        assert!(matches!(t.backward(x), Err(Error::Argument { .. })));
    }

    #[test]
    fn fan_out_accumulates() {
        let build = |uses: (bool, bool)| {
            let mut t = Tape::<f64>::new();
            let x = vec64(&mut t, &[0.4, -1.3]);
            let mut terms = Vec::new();
            if uses.0 {
                let a = t.tanh(x);
                terms.push(t.sum(a));
            }
            if uses.1 {
                let b = t.mul(x, x).unwrap();
                let b = t.exp(b);
                terms.push(t.sum(b));
            }
            let root = if terms.len() == 2 {
                t.add(terms[0], terms[1]).unwrap()
            } else {
                terms[0]
            };
            t.backward(root).unwrap().wrt(x)
        };
        let both = build((true, true));
        let a = build((true, false));
        let b = build((false, true));
        for i in 0..2 {
            assert!((both[i] - (a[i] + b[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn max_pool_examples() {
        let mut t = Tape::<f64>::new();
        let a = vec64(&mut t, &[1.0, 5.0]);
        let b = vec64(&mut t, &[3.0, 2.0]);
        let m = t.max_pool(&[a, b], None).unwrap();
        assert_eq!(t.value(m), &[3.0, 5.0]);
        let single = t.max_pool(&[a], None).unwrap();
        assert_eq!(t.value(single), t.value(a));

        let mut t = Tape::<f64>::new();
        let a = vec64(&mut t, &[2.0, 2.0]);
        let b = vec64(&mut t, &[2.0, 2.0]);
        let m = t.max_pool(&[a, b], None).unwrap();
        assert_eq!(t.value(m), &[2.0, 2.0]);
        let root = t.sum(m);
        let g = t.backward(root).unwrap();
        assert_eq!(g.wrt(a), vec![1.0, 1.0]);
        assert_eq!(g.wrt(b), vec![0.0, 0.0]);
        assert!(t.max_pool(&[a, b], Some(&[false, false])).is_err());
    }

    #[test]
    fn grl_examples() {
        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[1.5, -2.0]);
        let y = t.grl(x);
        assert_eq!(t.value(y), &[1.5, -2.0]);
        let up = t.constant(Tensor::vector(vec![0.3, -0.7]));
        let p = t.mul(y, up).unwrap();
        let root = t.sum(p);
        assert_eq!(t.backward(root).unwrap().wrt(x), vec![-0.3, 0.7]);

        let mut t = Tape::<f64>::new();
        let x = vec64(&mut t, &[1.5, -2.0]);
        let y = t.grl(x);
        let y = t.grl(y);
        let up = t.constant(Tensor::vector(vec![0.3, -0.7]));
        let p = t.mul(y, up).unwrap();
        let root = t.sum(p);
        assert_eq!(t.backward(root).unwrap().wrt(x), vec![0.3, -0.7]);
    }

    #[test]
    fn fault_injection_changes_tanh_backward() {
        let mut t = Tape::<f64>::new();
        t.inject_fault("tanh");
        let x = vec64(&mut t, &[0.0]);
        let y = t.tanh(x);
        assert_eq!(t.backward(y).unwrap().wrt(x), vec![1.5]);
    }
}
