//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records every operation of one forward pass; [`Tape::backward`]
//! then returns the gradient of a scalar with respect to every parameter leaf.

use std::ops::Range;
use std::rc::Rc;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Constant sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn matmul(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, x.ncols()));
        for r in 0..self.rows {
            let mut row = out.row_mut(r);
            for k in self.indptr[r]..self.indptr[r + 1] {
                row.scaled_add(self.values[k], &x.row(self.indices[k]));
            }
        }
        out
    }

    pub fn transpose_matmul(&self, g: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.cols, g.ncols()));
        for r in 0..self.rows {
            let grow = g.row(r);
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.row_mut(self.indices[k]).scaled_add(self.values[k], &grow);
            }
        }
        out
    }

    /// Block-diagonal stacking.
    pub fn block_diag(parts: &[&Csr]) -> Csr {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let nnz = parts.iter().map(|p| p.values.len()).sum();
        let mut out = Csr {
            rows,
            cols,
            indptr: Vec::with_capacity(rows + 1),
            indices: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
        };
        out.indptr.push(0);
        let mut col_off = 0;
        for p in parts {
            for r in 0..p.rows {
                for k in p.indptr[r]..p.indptr[r + 1] {
                    out.indices.push(p.indices[k] + col_off);
                    out.values.push(p.values[k]);
                }
                out.indptr.push(out.indices.len());
            }
            col_off += p.cols;
        }
        out
    }
}

/// One attention block: `queries` attend to `keys` (row ranges of the query
/// and key matrices). With `causal`, query i of the block sees keys `..=i`.
/// Keys at block offset `>= valid_keys` are masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnBlock {
    pub queries: Range<usize>,
    pub keys: Range<usize>,
    pub causal: bool,
    pub valid_keys: usize,
}

impl AttnBlock {
    pub fn full(queries: Range<usize>, keys: Range<usize>) -> Self {
        let valid_keys = keys.len();
        AttnBlock {
            queries,
            keys,
            causal: false,
            valid_keys,
        }
    }

    pub fn causal(rows: Range<usize>) -> Self {
        let valid_keys = rows.len();
        AttnBlock {
            queries: rows.clone(),
            keys: rows,
            causal: true,
            valid_keys,
        }
    }

    fn masked(&self, i: usize, j: usize) -> bool {
        j >= self.valid_keys || (self.causal && j > i)
    }
}

enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Array2<f64>,
        inv_std: Vec<f64>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        blocks: Rc<Vec<AttnBlock>>,
        probs: Vec<Array2<f64>>,
    },
    GatherRows(Var, Rc<Vec<usize>>),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Reshape(Var),
    SpMM(Rc<Csr>, Var),
    SegmentPool {
        x: Var,
        segments: Rc<Vec<Vec<usize>>>,
        argmax: Vec<usize>,
    },
    SqErr {
        pred: Var,
        target: Array2<f64>,
        weight: Array2<f64>,
        scale: f64,
    },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[[0, 0]]
    }

    pub fn input(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Input)
    }

    /// A leaf whose gradient is reported under parameter index `id`.
    pub fn param(&mut self, id: usize, value: &Array2<f64>) -> Var {
        self.push(value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// `x + b` with `b` a single row broadcast over the rows of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Var {
        let v = self.value(x) + &self.value(b).row(0);
        self.push(v, Op::AddBias(x, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, Op::Scale(a, c))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    /// Row-wise layer normalization with affine rows `gamma`, `beta` (1 × d).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xv = self.value(x);
        let d = xv.ncols() as f64;
        let mut xhat = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for mut row in xhat.rows_mut() {
            let mean = row.sum() / d;
            row.mapv_inplace(|e| e - mean);
            let var = row.iter().map(|e| e * e).sum::<f64>() / d;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row.mapv_inplace(|e| e * is);
            inv_std.push(is);
        }
        let v = &xhat * &self.value(gamma).row(0) + self.value(beta).row(0);
        self.push(
            v,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        )
    }

    /// Multi-head scaled dot-product attention over `blocks`. Head h uses
    /// columns `h*dk..(h+1)*dk`; head outputs are written side by side.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, blocks: Rc<Vec<AttnBlock>>) -> Var {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let d = qv.ncols();
        assert!(heads > 0 && d % heads == 0, "heads must divide the width");
        let dk = d / heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let mut out = Array2::zeros((qv.nrows(), vv.ncols()));
        let mut probs = Vec::with_capacity(blocks.len() * heads);
        for blk in blocks.iter() {
            for h in 0..heads {
                let cols = h * dk..(h + 1) * dk;
                let qh = qv.slice(s![blk.queries.clone(), cols.clone()]);
                let kh = kv.slice(s![blk.keys.clone(), cols.clone()]);
                let vh = vv.slice(s![blk.keys.clone(), cols.clone()]);
                let mut p = qh.dot(&kh.t()) * scale;
                for (i, mut row) in p.rows_mut().into_iter().enumerate() {
                    for (j, e) in row.iter_mut().enumerate() {
                        if blk.masked(i, j) {
                            *e = f64::NEG_INFINITY;
                        }
                    }
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    row.mapv_inplace(|e| (e - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|e| e / sum);
                }
                out.slice_mut(s![blk.queries.clone(), cols]).assign(&p.dot(&vh));
                probs.push(p);
            }
        }
        self.push(
            out,
            Op::Attention {
                q,
                k,
                v,
                heads,
                blocks,
                probs,
            },
        )
    }

    /// Post-softmax weights of an attention node, one matrix per
    /// (block, head) in block-major order.
    pub fn attention_probs(&self, v: Var) -> Option<&[Array2<f64>]> {
        match &self.nodes[v.0].op {
            Op::Attention { probs, .. } => Some(probs),
            _ => None,
        }
    }

    pub fn gather_rows(&mut self, x: Var, index: Rc<Vec<usize>>) -> Var {
        let xv = self.value(x);
        let mut out = Array2::zeros((index.len(), xv.ncols()));
        for (r, &i) in index.iter().enumerate() {
            out.row_mut(r).assign(&xv.row(i));
        }
        self.push(out, Op::GatherRows(x, index))
    }

    pub fn slice_cols(&mut self, x: Var, cols: Range<usize>) -> Var {
        let start = cols.start;
        let v = self.value(x).slice(s![.., cols]).to_owned();
        self.push(v, Op::SliceCols(x, start))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let v = concatenate(Axis(1), &views).expect("row counts agree");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let v = concatenate(Axis(0), &views).expect("column counts agree");
        self.push(v, Op::ConcatRows(parts.to_vec()))
    }

    /// Row-major reshape.
    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        let flat: Vec<f64> = self.value(x).iter().copied().collect();
        let v = Array2::from_shape_vec((rows, cols), flat).expect("reshape preserves size");
        self.push(v, Op::Reshape(x))
    }

    pub fn spmm(&mut self, a: Rc<Csr>, x: Var) -> Var {
        let v = a.matmul(self.value(x).view());
        self.push(v, Op::SpMM(a, x))
    }

    /// Output row r is `[mean | max]` over the rows of `x` listed in
    /// `segments[r]`; empty segments give zero rows.
    pub fn segment_pool(&mut self, x: Var, segments: Rc<Vec<Vec<usize>>>) -> Var {
        let xv = self.value(x);
        let d = xv.ncols();
        let mut out = Array2::zeros((segments.len(), 2 * d));
        let mut argmax = vec![usize::MAX; segments.len() * d];
        for (r, seg) in segments.iter().enumerate() {
            if seg.is_empty() {
                continue;
            }
            let inv = 1.0 / seg.len() as f64;
            for c in 0..d {
                let mut sum = 0.0;
                let mut best = f64::NEG_INFINITY;
                let mut arg = seg[0];
                for &i in seg {
                    let e = xv[[i, c]];
                    sum += e;
                    if e > best {
                        best = e;
                        arg = i;
                    }
                }
                out[[r, c]] = sum * inv;
                out[[r, d + c]] = best;
                argmax[r * d + c] = arg;
            }
        }
        self.push(out, Op::SegmentPool { x, segments, argmax })
    }

    /// `scale * sum(weight * (pred - target)^2)` as a 1 × 1 value.
    pub fn sq_err(&mut self, pred: Var, target: Array2<f64>, weight: Array2<f64>, scale: f64) -> Var {
        let pv = self.value(pred);
        assert_eq!(pv.dim(), target.dim(), "prediction and target shapes differ");
        let mut total = 0.0;
        Zip::from(pv).and(&target).and(&weight).for_each(|&p, &t, &w| {
            total += w * (p - t) * (p - t);
        });
        self.push(
            Array2::from_elem((1, 1), scale * total),
            Op::SqErr {
                pred,
                target,
                weight,
                scale,
            },
        )
    }

    /// Gradients of the scalar `loss` with respect to every parameter leaf,
    /// indexed by parameter id (`None` when a parameter was not used).
    pub fn backward(&self, loss: Var, num_params: usize) -> Vec<Option<Array2<f64>>> {
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));
        let mut param_grads: Vec<Option<Array2<f64>>> = (0..num_params).map(|_| None).collect();

        fn acc(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => match &mut param_grads[*id] {
                    Some(existing) => *existing += &g,
                    slot => *slot = Some(g),
                },
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddBias(x, b) => {
                    let gb = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *b, gb);
                    acc(&mut grads, *x, g);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Scale(a, c) => acc(&mut grads, *a, g * *c),
                Op::Relu(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(self.value(*a)).for_each(|gi, &x| {
                        if x <= 0.0 {
                            *gi = 0.0;
                        }
                    });
                    acc(&mut grads, *a, ga);
                }
                Op::Tanh(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(&node.value).for_each(|gi, &y| *gi *= 1.0 - y * y);
                    acc(&mut grads, *a, ga);
                }
                Op::Sigmoid(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(&node.value).for_each(|gi, &y| *gi *= y * (1.0 - y));
                    acc(&mut grads, *a, ga);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let gbeta = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    let ggamma = (&g * xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
                    let gam = self.value(*gamma).row(0).to_owned();
                    let dxhat = &g * &gam;
                    let d = xhat.ncols() as f64;
                    let mut gx = Array2::zeros(xhat.dim());
                    for r in 0..xhat.nrows() {
                        let dh = dxhat.row(r);
                        let xh = xhat.row(r);
                        let mean_dh = dh.sum() / d;
                        let mean_dh_xh = dh.iter().zip(xh.iter()).map(|(a, b)| a * b).sum::<f64>() / d;
                        let is = inv_std[r];
                        for c in 0..xhat.ncols() {
                            gx[[r, c]] = is * (dh[c] - mean_dh - xh[c] * mean_dh_xh);
                        }
                    }
                    acc(&mut grads, *beta, gbeta);
                    acc(&mut grads, *gamma, ggamma);
                    acc(&mut grads, *x, gx);
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    heads,
                    blocks,
                    probs,
                } => {
                    let (qv, kv, vv) = (self.value(*q), self.value(*k), self.value(*v));
                    let dk = qv.ncols() / heads;
                    let scale = 1.0 / (dk as f64).sqrt();
                    let mut gq = Array2::zeros(qv.dim());
                    let mut gk = Array2::zeros(kv.dim());
                    let mut gv = Array2::zeros(vv.dim());
                    for (b, blk) in blocks.iter().enumerate() {
                        for h in 0..*heads {
                            let p = &probs[b * heads + h];
                            let cols = h * dk..(h + 1) * dk;
                            let go = g.slice(s![blk.queries.clone(), cols.clone()]);
                            let qh = qv.slice(s![blk.queries.clone(), cols.clone()]);
                            let kh = kv.slice(s![blk.keys.clone(), cols.clone()]);
                            let vh = vv.slice(s![blk.keys.clone(), cols.clone()]);
                            let mut gp = go.dot(&vh.t());
                            let gvh = p.t().dot(&go);
                            for (i, mut row) in gp.rows_mut().into_iter().enumerate() {
                                let pr = p.row(i);
                                let dot: f64 = row.iter().zip(pr.iter()).map(|(a, b)| a * b).sum();
                                for (e, &pe) in row.iter_mut().zip(pr.iter()) {
                                    *e = pe * (*e - dot) * scale;
                                }
                            }
                            let gqh = gp.dot(&kh);
                            let gkh = gp.t().dot(&qh);
                            let mut t = gq.slice_mut(s![blk.queries.clone(), cols.clone()]);
                            t += &gqh;
                            let mut t = gk.slice_mut(s![blk.keys.clone(), cols.clone()]);
                            t += &gkh;
                            let mut t = gv.slice_mut(s![blk.keys.clone(), cols]);
                            t += &gvh;
                        }
                    }
                    acc(&mut grads, *q, gq);
                    acc(&mut grads, *k, gk);
                    acc(&mut grads, *v, gv);
                }
                Op::GatherRows(x, index) => {
                    let mut gx = Array2::zeros(self.value(*x).dim());
                    for (r, &i) in index.iter().enumerate() {
                        let mut row = gx.row_mut(i);
                        row += &g.row(r);
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::SliceCols(x, start) => {
                    let mut gx = Array2::zeros(self.value(*x).dim());
                    gx.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(&mut grads, *x, gx);
                }
                Op::ConcatCols(parts) => {
                    let mut c = 0;
                    for &p in parts {
                        let w = self.value(p).ncols();
                        acc(&mut grads, p, g.slice(s![.., c..c + w]).to_owned());
                        c += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut r = 0;
                    for &p in parts {
                        let h = self.value(p).nrows();
                        acc(&mut grads, p, g.slice(s![r..r + h, ..]).to_owned());
                        r += h;
                    }
                }
                Op::Reshape(x) => {
                    let dim = self.value(*x).dim();
                    let flat: Vec<f64> = g.iter().copied().collect();
                    acc(&mut grads, *x, Array2::from_shape_vec(dim, flat).expect("same size"));
                }
                Op::SpMM(a, x) => acc(&mut grads, *x, a.transpose_matmul(g.view())),
                Op::SegmentPool { x, segments, argmax } => {
                    let d = self.value(*x).ncols();
                    let mut gx = Array2::zeros(self.value(*x).dim());
                    for (r, seg) in segments.iter().enumerate() {
                        if seg.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / seg.len() as f64;
                        for &i in seg {
                            for c in 0..d {
                                gx[[i, c]] += g[[r, c]] * inv;
                            }
                        }
                        for c in 0..d {
                            gx[[argmax[r * d + c], c]] += g[[r, d + c]];
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::SqErr {
                    pred,
                    target,
                    weight,
                    scale,
                } => {
                    let g0 = g[[0, 0]];
                    let mut gp = self.value(*pred) - target;
                    Zip::from(&mut gp).and(weight).for_each(|e, &w| *e *= 2.0 * scale * w * g0);
                    acc(&mut grads, *pred, gp);
                }
            }
        }
        param_grads
    }
}
