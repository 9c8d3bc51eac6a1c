//! Reverse-mode differentiation over row-major matrices.
//!
//! Every operation appends a node holding its value; nodes are only ever
//! appended, so tape order is a topological order and `backward` walks it
//! once in reverse.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::{Gradients, Matrix, ParamId, ParamStore};
use crate::{Error, Result, Scalar};

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    index: usize,
    tape: u64,
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    Param(ParamId),
    /// `x W^T + b`
    Linear { x: usize, w: usize, b: usize },
    Relu(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Scale(usize, T),
    Gather { src: usize, idx: Vec<usize> },
    /// `out[dst[i]] += w[i] * src[i]`
    ScatterAdd { src: usize, dst: Vec<usize>, weights: Option<Vec<T>> },
    Concat(Vec<usize>),
    BatchNormTrain { x: usize, gamma: usize, beta: usize, weights: Option<Vec<T>>, xhat: Matrix<T>, inv_std: Vec<T> },
    BatchNormEval { x: usize, gamma: usize, beta: usize, xhat: Matrix<T>, inv_std: Vec<T> },
    SoftmaxCe { logits: usize, labels: Vec<usize>, probs: Matrix<T> },
    SumAll(usize),
}

#[derive(Clone, Debug)]
struct Node<T> {
    op: Op<T>,
    value: Matrix<T>,
}

/// Recorded computation for one forward pass.
#[derive(Debug)]
pub struct Tape<T> {
    id: u64,
    nodes: Vec<Node<T>>,
    params: HashMap<ParamId, usize>,
    buffer_updates: Vec<(ParamId, Matrix<T>)>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of a backward pass: gradients for every parameter touched and for
/// every recorded value.
#[derive(Debug)]
pub struct Backward<T> {
    tape: u64,
    nodes: Vec<Option<Matrix<T>>>,
    pub params: Gradients<T>,
}

impl<T: Scalar> Backward<T> {
    /// Gradient with respect to a recorded value (zero-shaped `None` if the
    /// value did not influence the output).
    pub fn wrt(&self, v: Var) -> Option<&Matrix<T>> {
        if v.tape != self.tape {
            return None;
        }
        self.nodes.get(v.index).and_then(Option::as_ref)
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed), nodes: Vec::new(), params: HashMap::new(), buffer_updates: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op<T>, value: Matrix<T>) -> Var {
        self.nodes.push(Node { op, value });
        Var { index: self.nodes.len() - 1, tape: self.id }
    }

    fn idx(&self, v: Var) -> usize {
        assert_eq!(v.tape, self.id, "variable recorded on a different tape");
        v.index
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[self.idx(v)].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    /// Constant input (no gradient flows to a store).
    pub fn leaf(&mut self, value: Matrix<T>) -> Var {
        self.push(Op::Leaf, value)
    }

    /// Records a parameter; repeated requests return the same node.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&i) = self.params.get(&id) {
            return Var { index: i, tape: self.id };
        }
        let v = self.push(Op::Param(id), store.value(id).clone());
        self.params.insert(id, v.index);
        v
    }

    /// `x W^T + b` where `W` is `out x in` and `b` is `1 x out`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xi, wi, bi) = (self.idx(x), self.idx(w), self.idx(b));
        let (xv, wv, bv) = (&self.nodes[xi].value, &self.nodes[wi].value, &self.nodes[bi].value);
        if xv.cols() != wv.cols() || bv.shape() != (1, wv.rows()) {
            return Err(Error::Shape(format!(
                "linear: input {:?}, weight {:?}, bias {:?}",
                xv.shape(),
                wv.shape(),
                bv.shape()
            )));
        }
        let mut out = xv.matmul_t(wv);
        let bias = bv.row(0);
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(bias) {
                *o = *o + b;
            }
        }
        Ok(self.push(Op::Linear { x: xi, w: wi, b: bi }, out))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let xi = self.idx(x);
        let out = self.nodes[xi].value.map(T::relu);
        self.push(Op::Relu(xi), out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a), self.idx(b));
        if self.nodes[ai].value.shape() != self.nodes[bi].value.shape() {
            return Err(Error::Shape(format!(
                "add: {:?} vs {:?}",
                self.nodes[ai].value.shape(),
                self.nodes[bi].value.shape()
            )));
        }
        let out = self.nodes[ai].value.zip_map(&self.nodes[bi].value, |x, y| x + y);
        Ok(self.push(Op::Add(ai, bi), out))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a), self.idx(b));
        if self.nodes[ai].value.shape() != self.nodes[bi].value.shape() {
            return Err(Error::Shape("mul: shapes differ".into()));
        }
        let out = self.nodes[ai].value.zip_map(&self.nodes[bi].value, |x, y| x * y);
        Ok(self.push(Op::Mul(ai, bi), out))
    }

    pub fn scale(&mut self, x: Var, s: T) -> Var {
        let xi = self.idx(x);
        let out = self.nodes[xi].value.scale(s);
        self.push(Op::Scale(xi, s), out)
    }

    /// Rows `src[idx[0]], src[idx[1]], ...`.
    pub fn gather(&mut self, src: Var, idx: Vec<usize>) -> Result<Var> {
        let si = self.idx(src);
        let sv = &self.nodes[si].value;
        let mut out = Matrix::zeros(idx.len(), sv.cols());
        for (r, &i) in idx.iter().enumerate() {
            if i >= sv.rows() {
                return Err(Error::Shape(format!("gather: row {i} of {}", sv.rows())));
            }
            out.row_mut(r).copy_from_slice(sv.row(i));
        }
        Ok(self.push(Op::Gather { src: si, idx }, out))
    }

    /// `rows x cols` output with `out[dst[i]] += weights[i] * src[i]`
    /// (weights default to one). Rows never targeted stay zero.
    pub fn scatter_add(&mut self, src: Var, dst: Vec<usize>, weights: Option<Vec<T>>, rows: usize) -> Result<Var> {
        let si = self.idx(src);
        let sv = &self.nodes[si].value;
        if dst.len() != sv.rows() || weights.as_ref().is_some_and(|w| w.len() != dst.len()) {
            return Err(Error::Shape(format!("scatter_add: {} targets for {} rows", dst.len(), sv.rows())));
        }
        let mut out = Matrix::zeros(rows, sv.cols());
        for (i, &d) in dst.iter().enumerate() {
            if d >= rows {
                return Err(Error::Shape(format!("scatter_add: target {d} of {rows}")));
            }
            let w = weights.as_ref().map_or(T::one(), |w| w[i]);
            for (o, &v) in out.row_mut(d).iter_mut().zip(sv.row(i)) {
                *o = *o + w * v;
            }
        }
        Ok(self.push(Op::ScatterAdd { src: si, dst, weights }, out))
    }

    /// Vertical concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let idx: Vec<usize> = parts.iter().map(|&p| self.idx(p)).collect();
        let cols = idx.first().map_or(0, |&i| self.nodes[i].value.cols());
        let mut data = Vec::new();
        let mut rows = 0;
        for &i in &idx {
            let v = &self.nodes[i].value;
            if v.cols() != cols {
                return Err(Error::Shape("concat: column counts differ".into()));
            }
            rows += v.rows();
            data.extend_from_slice(v.as_slice());
        }
        Ok(self.push(Op::Concat(idx), Matrix::from_vec(rows, cols, data)))
    }

    /// Training-mode batch normalization with optional per-row multiplicities.
    /// Returns the output together with the weighted batch mean and biased
    /// variance.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        weights: Option<Vec<T>>,
        eps: T,
    ) -> Result<(Var, Vec<T>, Vec<T>)> {
        let (xi, gi, bi) = (self.idx(x), self.idx(gamma), self.idx(beta));
        let xv = &self.nodes[xi].value;
        let (n, c) = xv.shape();
        if n == 0 {
            return Err(Error::Empty("batch norm over an empty batch".into()));
        }
        if self.nodes[gi].value.shape() != (1, c) || self.nodes[bi].value.shape() != (1, c) {
            return Err(Error::Shape("batch norm scale/shift shape".into()));
        }
        if weights.as_ref().is_some_and(|w| w.len() != n) {
            return Err(Error::Shape("batch norm weights length".into()));
        }
        let w = |i: usize| weights.as_ref().map_or(T::one(), |w| w[i]);
        let total: T = (0..n).map(w).sum();
        if total <= T::zero() {
            return Err(Error::Empty("batch norm with zero total weight".into()));
        }
        let mut mean = vec![T::zero(); c];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(xv.row(i)) {
                *m = *m + w(i) * v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / total);
        let mut var = vec![T::zero(); c];
        for i in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(xv.row(i)).zip(&mean) {
                *s = *s + w(i) * (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = *s / total);
        let inv_std: Vec<T> = var.iter().map(|&s| T::one() / (s + eps).sqrt()).collect();
        let mut xhat = Matrix::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                xhat[(i, j)] = (xv[(i, j)] - mean[j]) * inv_std[j];
            }
        }
        let out = affine_rows(&xhat, &self.nodes[gi].value, &self.nodes[bi].value);
        let v = self.push(Op::BatchNormTrain { x: xi, gamma: gi, beta: bi, weights, xhat, inv_std }, out);
        Ok((v, mean, var))
    }

    /// Inference-mode batch normalization with fixed statistics.
    pub fn batch_norm_eval(&mut self, x: Var, gamma: Var, beta: Var, mean: &[T], var: &[T], eps: T) -> Result<Var> {
        let (xi, gi, bi) = (self.idx(x), self.idx(gamma), self.idx(beta));
        let xv = &self.nodes[xi].value;
        let c = xv.cols();
        if mean.len() != c || var.len() != c || self.nodes[gi].value.shape() != (1, c) {
            return Err(Error::Shape("batch norm statistics shape".into()));
        }
        let inv_std: Vec<T> = var.iter().map(|&s| T::one() / (s + eps).sqrt()).collect();
        let mut xhat = Matrix::zeros(xv.rows(), c);
        for i in 0..xv.rows() {
            for j in 0..c {
                xhat[(i, j)] = (xv[(i, j)] - mean[j]) * inv_std[j];
            }
        }
        let out = affine_rows(&xhat, &self.nodes[gi].value, &self.nodes[bi].value);
        Ok(self.push(Op::BatchNormEval { x: xi, gamma: gi, beta: bi, xhat, inv_std }, out))
    }

    /// Mean softmax cross-entropy over rows; output is `1 x 1`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: Vec<usize>) -> Result<Var> {
        let li = self.idx(logits);
        let lv = &self.nodes[li].value;
        if labels.len() != lv.rows() {
            return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), lv.rows())));
        }
        if labels.is_empty() {
            return Err(Error::Empty("cross-entropy over zero rows".into()));
        }
        let mut probs = Matrix::zeros(lv.rows(), lv.cols());
        let mut total = T::zero();
        for (i, &y) in labels.iter().enumerate() {
            let (loss, p) = softmax_row(lv.row(i), y)?;
            total = total + loss;
            probs.row_mut(i).copy_from_slice(&p);
        }
        let n = T::from_usize(labels.len()).unwrap();
        Ok(self.push(Op::SoftmaxCe { logits: li, labels, probs }, Matrix::from_vec(1, 1, vec![total / n])))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let xi = self.idx(x);
        let s = self.nodes[xi].value.sum();
        self.push(Op::SumAll(xi), Matrix::from_vec(1, 1, vec![s]))
    }

    /// Fingerprint of which ReLU inputs are positive. Two evaluations with
    /// equal patterns lie on the same linear piece of every activation.
    pub fn activation_pattern(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for node in &self.nodes {
            if let Op::Relu(x) = node.op {
                for &v in self.nodes[x].value.as_slice() {
                    (v > T::zero()).hash(&mut h);
                }
            }
        }
        h.finish()
    }

    /// Queues a buffer overwrite (e.g. batch-norm running statistics) to be
    /// applied by the caller once the step is complete.
    pub fn record_buffer_update(&mut self, id: ParamId, value: Matrix<T>) {
        self.buffer_updates.push((id, value));
    }

    pub fn take_buffer_updates(&mut self) -> Vec<(ParamId, Matrix<T>)> {
        std::mem::take(&mut self.buffer_updates)
    }

    /// Backward pass from a `1 x 1` output with unit seed.
    pub fn backward_scalar(&self, output: Var) -> Result<Backward<T>> {
        self.backward(output, &Matrix::from_vec(1, 1, vec![T::one()]))
    }

    /// Reverse-mode pass seeded with `upstream` at `output`.
    pub fn backward(&self, output: Var, upstream: &Matrix<T>) -> Result<Backward<T>> {
        if output.tape != self.id || output.index >= self.nodes.len() {
            return Err(Error::NotRecorded);
        }
        if self.nodes[output.index].value.shape() != upstream.shape() {
            return Err(Error::Shape("upstream gradient shape".into()));
        }
        let mut grads: Vec<Option<Matrix<T>>> = vec![None; output.index + 1];
        grads[output.index] = Some(upstream.clone());
        let mut params = Gradients::with_len(0);

        fn acc<T: Scalar>(grads: &mut [Option<Matrix<T>>], i: usize, g: Matrix<T>) {
            match &mut grads[i] {
                Some(a) => a.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for i in (0..=output.index).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => params.accumulate(*id, &g),
                Op::Linear { x, w, b } => {
                    let (xv, wv) = (&self.nodes[*x].value, &self.nodes[*w].value);
                    acc(&mut grads, *x, g.matmul(wv));
                    acc(&mut grads, *w, g.t_matmul(xv));
                    acc(&mut grads, *b, Matrix::from_vec(1, g.cols(), g.column_sums()));
                }
                Op::Relu(x) => {
                    let xv = &self.nodes[*x].value;
                    acc(&mut grads, *x, g.zip_map(xv, |gv, v| if v > T::zero() { gv } else { T::zero() }));
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.clone());
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    acc(&mut grads, *a, g.zip_map(bv, |x, y| x * y));
                    acc(&mut grads, *b, g.zip_map(av, |x, y| x * y));
                }
                Op::Scale(x, s) => acc(&mut grads, *x, g.scale(*s)),
                Op::Gather { src, idx } => {
                    let sv = &self.nodes[*src].value;
                    let mut gs = Matrix::zeros(sv.rows(), sv.cols());
                    for (r, &j) in idx.iter().enumerate() {
                        for (o, &v) in gs.row_mut(j).iter_mut().zip(g.row(r)) {
                            *o = *o + v;
                        }
                    }
                    acc(&mut grads, *src, gs);
                }
                Op::ScatterAdd { src, dst, weights } => {
                    let sv = &self.nodes[*src].value;
                    let mut gs = Matrix::zeros(sv.rows(), sv.cols());
                    for (r, &d) in dst.iter().enumerate() {
                        let w = weights.as_ref().map_or(T::one(), |w| w[r]);
                        for (o, &v) in gs.row_mut(r).iter_mut().zip(g.row(d)) {
                            *o = w * v;
                        }
                    }
                    acc(&mut grads, *src, gs);
                }
                Op::Concat(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let (r, c) = self.nodes[p].value.shape();
                        let slice = g.as_slice()[start * c..(start + r) * c].to_vec();
                        acc(&mut grads, p, Matrix::from_vec(r, c, slice));
                        start += r;
                    }
                }
                Op::BatchNormTrain { x, gamma, beta, weights, xhat, inv_std } => {
                    let gv = &self.nodes[*gamma].value;
                    let (n, c) = xhat.shape();
                    let w = |i: usize| weights.as_ref().map_or(T::one(), |w| w[i]);
                    let total: T = (0..n).map(w).sum();
                    let mut dgamma = vec![T::zero(); c];
                    let mut dbeta = vec![T::zero(); c];
                    let mut s1 = vec![T::zero(); c];
                    let mut s2 = vec![T::zero(); c];
                    for i in 0..n {
                        for j in 0..c {
                            let gy = g[(i, j)];
                            dgamma[j] = dgamma[j] + gy * xhat[(i, j)];
                            dbeta[j] = dbeta[j] + gy;
                            let gx = gy * gv[(0, j)];
                            s1[j] = s1[j] + gx;
                            s2[j] = s2[j] + gx * xhat[(i, j)];
                        }
                    }
                    // rows are unique values with multiplicity w_i; `g` already
                    // sums the gradient over all copies of a row
                    let mut dx = Matrix::zeros(n, c);
                    for i in 0..n {
                        for j in 0..c {
                            let gx = g[(i, j)] * gv[(0, j)];
                            dx[(i, j)] = inv_std[j] / total * (total * gx - w(i) * s1[j] - w(i) * xhat[(i, j)] * s2[j]);
                        }
                    }
                    acc(&mut grads, *x, dx);
                    acc(&mut grads, *gamma, Matrix::from_vec(1, c, dgamma));
                    acc(&mut grads, *beta, Matrix::from_vec(1, c, dbeta));
                }
                Op::BatchNormEval { x, gamma, beta, xhat, inv_std } => {
                    let gv = &self.nodes[*gamma].value;
                    let (n, c) = xhat.shape();
                    let mut dx = Matrix::zeros(n, c);
                    for i in 0..n {
                        for j in 0..c {
                            dx[(i, j)] = g[(i, j)] * gv[(0, j)] * inv_std[j];
                        }
                    }
                    let dgamma: Vec<T> = (0..c).map(|j| (0..n).map(|i| g[(i, j)] * xhat[(i, j)]).sum()).collect();
                    acc(&mut grads, *x, dx);
                    acc(&mut grads, *gamma, Matrix::from_vec(1, c, dgamma));
                    acc(&mut grads, *beta, Matrix::from_vec(1, c, g.column_sums()));
                }
                Op::SoftmaxCe { logits, labels, probs } => {
                    let n = T::from_usize(labels.len()).unwrap();
                    let seed = g[(0, 0)] / n;
                    let mut dl = probs.clone();
                    for (i, &y) in labels.iter().enumerate() {
                        dl[(i, y)] = dl[(i, y)] - T::one();
                    }
                    acc(&mut grads, *logits, dl.scale(seed));
                }
                Op::SumAll(x) => {
                    let (r, c) = self.nodes[*x].value.shape();
                    acc(&mut grads, *x, Matrix::filled(r, c, g[(0, 0)]));
                }
            }
            grads[i] = Some(g);
        }
        Ok(Backward { tape: self.id, nodes: grads, params })
    }
}

fn affine_rows<T: Scalar>(xhat: &Matrix<T>, gamma: &Matrix<T>, beta: &Matrix<T>) -> Matrix<T> {
    let mut out = xhat.clone();
    for i in 0..out.rows() {
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = *o * gamma[(0, j)] + beta[(0, j)];
        }
    }
    out
}

/// Numerically stable softmax cross-entropy for one row of logits.
/// Returns the loss and the softmax probabilities.
pub(crate) fn softmax_row<T: Scalar>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange { label, classes: logits.len() });
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    let loss = z.ln() - (logits[label] - max);
    Ok((loss, exps.into_iter().map(|e| e / z).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let mut tape = Tape::<f64>::new();
        let w = tape.leaf(Matrix::from_vec(1, 1, vec![3.0]));
        let sq = tape.mul(w, w).unwrap();
        let b = tape.backward_scalar(sq).unwrap();
        assert_eq!(b.wrt(w).unwrap()[(0, 0)], 6.0);
    }

    #[test]
    fn zero_upstream_gives_zero_param_grads() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 4.0]]));
        let b = store.add("b", Matrix::from_rows(&[vec![0.1, 0.2]]));
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, -1.0]]));
        let (wv, bv) = (tape.param(&store, w), tape.param(&store, b));
        let y = tape.linear(x, wv, bv).unwrap();
        let out = tape.backward(y, &Matrix::zeros(2, 2)).unwrap();
        for (_, g) in out.params.iter() {
            assert!(g.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn foreign_var_is_rejected() {
        let mut a = Tape::<f64>::new();
        let b = Tape::<f64>::new();
        let x = a.leaf(Matrix::zeros(1, 1));
        assert!(matches!(b.backward_scalar(x), Err(Error::NotRecorded)));
    }

    #[test]
    fn param_recorded_once() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Matrix::zeros(1, 1));
        let mut tape = Tape::new();
        let a = tape.param(&store, w);
        let b = tape.param(&store, w);
        assert_eq!(a, b);
        assert_eq!(tape.len(), 1);
    }

    #[test]
    fn scatter_gather_adjoint() {
        // <scatter(x), y> == <x, gather-weighted(y)>
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]));
        let s = tape.scatter_add(x, vec![1, 0, 1], Some(vec![0.5, 1.0, 2.0]), 2).unwrap();
        assert_eq!(tape.value(s).as_slice(), &[2.0, 6.5]);
        let back = tape.backward(s, &Matrix::from_rows(&[vec![10.0], vec![100.0]])).unwrap();
        assert_eq!(back.wrt(x).unwrap().as_slice(), &[50.0, 10.0, 200.0]);
    }
}
