use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::TensorError;
use crate::tensor::Tensor;

/// Norms below this make a row pass through `l2_normalize_rows` unscaled.
pub const L2_NORM_FLOOR: f64 = 1e-12;

const GELU_COEFF: f64 = 0.044715;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddBias(Var, Var),
    SubCol(Var, Var),
    Matmul(Var, Var),
    Permute(Var, Vec<usize>),
    Reshape(Var),
    Concat(Vec<Var>, usize),
    MeanAxis(Var, usize),
    RowSum(Var),
    SumAll(Var),
    Exp(Var),
    Log(Var),
    Gelu(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor,
        inv_std: Vec<f64>,
    },
    L2NormalizeRows {
        x: Var,
        inv_norm: Vec<f64>,
        valid: Vec<bool>,
    },
    EmbeddingAdd {
        x: Var,
        table: Var,
    },
    Dropout {
        x: Var,
        mask: Option<Tensor>,
    },
    BceWithLogitsMean {
        logits: Var,
        targets: Var,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddBias(..) => "add_bias",
            Op::SubCol(..) => "sub_col",
            Op::Matmul(..) => "matmul",
            Op::Permute(..) => "permute",
            Op::Reshape(..) => "reshape",
            Op::Concat(..) => "concat",
            Op::MeanAxis(..) => "mean_axis",
            Op::RowSum(..) => "row_sum",
            Op::SumAll(..) => "sum_all",
            Op::Exp(..) => "exp",
            Op::Log(..) => "log",
            Op::Gelu(..) => "gelu",
            Op::Softmax(..) => "softmax",
            Op::LayerNorm { .. } => "layer_norm",
            Op::L2NormalizeRows { .. } => "l2_normalize_rows",
            Op::EmbeddingAdd { .. } => "embedding_add",
            Op::Dropout { .. } => "dropout",
            Op::BceWithLogitsMean { .. } => "bce_with_logits_mean",
        }
    }
}

/// A reverse-mode computation tape over dense [`Tensor`] values.
///
/// Nodes are appended in creation order, so node ids are already a
/// topological order and [`Graph::backward`] walks them in reverse.
/// Gradients accumulate across backward calls until [`Graph::zero_grads`];
/// running backward twice doubles every gradient.
#[derive(Default)]
pub struct Graph {
    values: Vec<Tensor>,
    ops: Vec<Op>,
    requires: Vec<bool>,
    grads: Vec<Option<Tensor>>,
    fault: Option<&'static str>,
    degenerate_rows: usize,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inserts a constant; no gradient is tracked for it.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Inserts a trainable tensor; gradients accumulate on it.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn zero_grads(&mut self) {
        for g in self.grads.iter_mut() {
            *g = None;
        }
    }

    /// Number of rows that hit the `l2_normalize_rows` passthrough floor.
    pub fn degenerate_row_events(&self) -> usize {
        self.degenerate_rows
    }

    /// Testing hook: corrupts the backward rule of the named op by scaling
    /// its first parent contribution. Lets gradient-checker tests verify
    /// they can detect a broken rule.
    pub fn inject_backward_fault(&mut self, op: &'static str) {
        self.fault = Some(op);
    }

    fn push(&mut self, value: Tensor, op: Op, requires: bool) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.requires.push(requires);
        self.grads.push(None);
        Var(self.values.len() - 1)
    }

    fn child(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let requires = parents.iter().any(|p| self.requires[p.0]);
        self.push(value, op, requires)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.same_shape("add", a, b)?;
        Ok(self.child(value, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = {
            let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
            if ta.shape() != tb.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "sub",
                    lhs: ta.shape().to_vec(),
                    rhs: tb.shape().to_vec(),
                });
            }
            ta.zip_map(tb, |x, y| x - y)?
        };
        Ok(self.child(value, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = {
            let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
            if ta.shape() != tb.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "mul",
                    lhs: ta.shape().to_vec(),
                    rhs: tb.shape().to_vec(),
                });
            }
            ta.zip_map(tb, |x, y| x * y)?
        };
        Ok(self.child(value, Op::Mul(a, b), &[a, b]))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<Tensor, TensorError> {
        let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
        if ta.shape() != tb.shape() {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        ta.zip_map(tb, |x, y| x + y)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.values[a.0].map(|v| v * factor);
        self.child(value, Op::Scale(a, factor), &[a])
    }

    /// Adds a rank-1 bias over the last axis: `x[..., c] + b[c]`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var, TensorError> {
        let (tx, tb) = (&self.values[x.0], &self.values[b.0]);
        let c = *tx.shape().last().unwrap_or(&0);
        if tb.rank() != 1 || tb.numel() != c {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: tx.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let mut data = tx.data().to_vec();
        for row in data.chunks_exact_mut(c) {
            for (v, &bv) in row.iter_mut().zip(tb.data()) {
                *v += bv;
            }
        }
        let value = Tensor::from_vec(data, tx.shape())?;
        Ok(self.child(value, Op::AddBias(x, b), &[x, b]))
    }

    /// Subtracts a per-row column vector: `x[r, c] - col[r, 0]`.
    pub fn sub_col(&mut self, x: Var, col: Var) -> Result<Var, TensorError> {
        let (tx, tc) = (&self.values[x.0], &self.values[col.0]);
        if tx.rank() != 2 || tc.shape() != [tx.shape()[0], 1] {
            return Err(TensorError::ShapeMismatch {
                op: "sub_col",
                lhs: tx.shape().to_vec(),
                rhs: tc.shape().to_vec(),
            });
        }
        let cols = tx.shape()[1];
        let mut data = tx.data().to_vec();
        for (row, &cv) in data.chunks_exact_mut(cols).zip(tc.data()) {
            for v in row.iter_mut() {
                *v -= cv;
            }
        }
        let value = Tensor::from_vec(data, tx.shape())?;
        Ok(self.child(value, Op::SubCol(x, col), &[x, col]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.values[a.0].matmul(&self.values[b.0])?;
        Ok(self.child(value, Op::Matmul(a, b), &[a, b]))
    }

    pub fn permute(&mut self, x: Var, axes: &[usize]) -> Result<Var, TensorError> {
        let value = self.values[x.0].permuted(axes)?;
        Ok(self.child(value, Op::Permute(x, axes.to_vec()), &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let value = self.values[x.0].reshaped(shape)?;
        Ok(self.child(value, Op::Reshape(x), &[x]))
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var, TensorError> {
        if xs.is_empty() {
            return Err(TensorError::EmptyOperands { op: "concat" });
        }
        let first = self.values[xs[0].0].shape().to_vec();
        if axis >= first.len() {
            return Err(TensorError::BadAxis {
                op: "concat",
                axis,
                shape: first,
            });
        }
        let mut axis_total = 0;
        for v in xs {
            let s = self.values[v.0].shape();
            if s.len() != first.len()
                || s.iter()
                    .zip(first.iter())
                    .enumerate()
                    .any(|(d, (a, b))| d != axis && a != b)
            {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: first,
                    rhs: s.to_vec(),
                });
            }
            axis_total += s[axis];
        }
        let mut out_shape = first.clone();
        out_shape[axis] = axis_total;
        let outer: usize = first[..axis].iter().product();
        let inner: usize = first[axis + 1..].iter().product();
        let mut data = vec![0.0; out_shape.iter().product()];
        let mut offset = 0;
        for v in xs {
            let t = &self.values[v.0];
            let width = t.shape()[axis] * inner;
            for o in 0..outer {
                let dst = o * axis_total * inner + offset;
                data[dst..dst + width].copy_from_slice(&t.data()[o * width..(o + 1) * width]);
            }
            offset += width;
        }
        let value = Tensor::from_vec(data, &out_shape)?;
        Ok(self.child(value, Op::Concat(xs.to_vec(), axis), xs))
    }

    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        let value = self.values[x.0].mean_axis(axis)?;
        Ok(self.child(value, Op::MeanAxis(x, axis), &[x]))
    }

    pub fn row_sum(&mut self, x: Var) -> Result<Var, TensorError> {
        let value = self.values[x.0].row_sum()?;
        Ok(self.child(value, Op::RowSum(x), &[x]))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.values[x.0].sum_all());
        self.child(value, Op::SumAll(x), &[x])
    }

    /// Row-wise max as a constant: no gradient flows through it. Intended
    /// for log-sum-exp shifts, where the shift cancels exactly and treating
    /// it as constant leaves gradients unchanged.
    pub fn row_max_detached(&mut self, x: Var) -> Result<Var, TensorError> {
        let value = self.values[x.0].row_max()?;
        Ok(self.leaf(value))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let value = self.values[x.0].map(f64::exp);
        self.child(value, Op::Exp(x), &[x])
    }

    pub fn log(&mut self, x: Var) -> Var {
        let value = self.values[x.0].map(f64::ln);
        self.child(value, Op::Log(x), &[x])
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let value = self.values[x.0].map(gelu);
        self.child(value, Op::Gelu(x), &[x])
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        let value = self.values[x.0].softmax_lastdim();
        self.child(value, Op::Softmax(x), &[x])
    }

    /// Normalizes over the last axis to zero mean and unit variance, then
    /// applies the affine `gamma`/`beta`.
    pub fn layer_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<Var, TensorError> {
        let tx = &self.values[x.0];
        let c = *tx.shape().last().unwrap_or(&0);
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            let t = &self.values[v.0];
            if t.rank() != 1 || t.numel() != c {
                let _ = name;
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    lhs: tx.shape().to_vec(),
                    rhs: t.shape().to_vec(),
                });
            }
        }
        let rows = tx.numel() / c;
        let g = self.values[gamma.0].data().to_vec();
        let b = self.values[beta.0].data().to_vec();
        let mut xhat = vec![0.0; tx.numel()];
        let mut inv_std = vec![0.0; rows];
        let mut out = vec![0.0; tx.numel()];
        for r in 0..rows {
            let row = &tx.data()[r * c..(r + 1) * c];
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let istd = 1.0 / (var + eps).sqrt();
            inv_std[r] = istd;
            for (i, &v) in row.iter().enumerate() {
                let h = (v - mean) * istd;
                xhat[r * c + i] = h;
                out[r * c + i] = h * g[i] + b[i];
            }
        }
        let value = Tensor::from_vec(out, tx.shape())?;
        let xhat = Tensor::from_vec(xhat, self.values[x.0].shape())?;
        Ok(self.child(
            value,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[x, gamma, beta],
        ))
    }

    /// Scales each last-axis row to unit Euclidean norm. Rows with norm
    /// under [`L2_NORM_FLOOR`] pass through unscaled and are counted in
    /// [`Graph::degenerate_row_events`].
    pub fn l2_normalize_rows(&mut self, x: Var) -> Var {
        let tx = &self.values[x.0];
        let c = *tx.shape().last().unwrap_or(&1);
        let rows = tx.numel() / c.max(1);
        let mut inv_norm = vec![1.0; rows];
        let mut valid = vec![true; rows];
        let mut data = tx.data().to_vec();
        let mut degenerate = 0;
        for r in 0..rows {
            let row = &mut data[r * c..(r + 1) * c];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < L2_NORM_FLOOR {
                valid[r] = false;
                degenerate += 1;
            } else {
                let inv = 1.0 / norm;
                inv_norm[r] = inv;
                for v in row.iter_mut() {
                    *v *= inv;
                }
            }
        }
        self.degenerate_rows += degenerate;
        let value = Tensor::from_vec(data, tx.shape()).expect("same shape");
        self.child(value, Op::L2NormalizeRows { x, inv_norm, valid }, &[x])
    }

    /// Adds a positional table to a `[B, T, D]` batch: row `t` of the table
    /// is added to every batch member's frame `t`. The table may be longer
    /// than `T`; trailing rows receive zero gradient.
    pub fn embedding_add(&mut self, x: Var, table: Var) -> Result<Var, TensorError> {
        let (tx, tt) = (&self.values[x.0], &self.values[table.0]);
        if tx.rank() != 3 {
            return Err(TensorError::BadRank {
                op: "embedding_add",
                expected: 3,
                shape: tx.shape().to_vec(),
            });
        }
        let (bsz, t, d) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
        if tt.rank() != 2 || tt.shape()[1] != d {
            return Err(TensorError::ShapeMismatch {
                op: "embedding_add",
                lhs: tx.shape().to_vec(),
                rhs: tt.shape().to_vec(),
            });
        }
        if t > tt.shape()[0] {
            return Err(TensorError::EmbeddingTooShort {
                seq: t,
                rows: tt.shape()[0],
            });
        }
        let mut data = tx.data().to_vec();
        for bi in 0..bsz {
            for ti in 0..t {
                let dst = (bi * t + ti) * d;
                let src = &tt.data()[ti * d..(ti + 1) * d];
                for (v, &p) in data[dst..dst + d].iter_mut().zip(src) {
                    *v += p;
                }
            }
        }
        let value = Tensor::from_vec(data, tx.shape())?;
        Ok(self.child(value, Op::EmbeddingAdd { x, table }, &[x, table]))
    }

    /// Inverted dropout: keeps each element with probability `1 - p`,
    /// scaling survivors by `1/(1-p)`. `p = 0` is an exact identity. The
    /// mask is a pure function of `seed`.
    pub fn dropout(&mut self, x: Var, p: f64, seed: u64) -> Result<Var, TensorError> {
        if !(0.0..1.0).contains(&p) {
            return Err(TensorError::BadDropout { p });
        }
        if p == 0.0 {
            let value = self.values[x.0].clone();
            return Ok(self.child(value, Op::Dropout { x, mask: None }, &[x]));
        }
        let tx = &self.values[x.0];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep_scale = 1.0 / (1.0 - p);
        let mask_data: Vec<f64> = (0..tx.numel())
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep_scale })
            .collect();
        let mask = Tensor::from_vec(mask_data, tx.shape())?;
        let value = tx.zip_map(&mask, |v, m| v * m)?;
        Ok(self.child(value, Op::Dropout { x, mask: Some(mask) }, &[x]))
    }

    /// Mean binary cross-entropy between logits and soft targets in [0, 1],
    /// computed in logit space: `max(l, 0) - l*y + ln(1 + exp(-|l|))`.
    pub fn bce_with_logits_mean(&mut self, logits: Var, targets: Var) -> Result<Var, TensorError> {
        let (tl, tt) = (&self.values[logits.0], &self.values[targets.0]);
        if tl.shape() != tt.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "bce_with_logits",
                lhs: tl.shape().to_vec(),
                rhs: tt.shape().to_vec(),
            });
        }
        if let Some((index, &value)) = tt
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(TensorError::TargetOutOfRange { index, value });
        }
        let n = tl.numel() as f64;
        let total: f64 = tl
            .data()
            .iter()
            .zip(tt.data())
            .map(|(&l, &y)| l.max(0.0) - l * y + (-l.abs()).exp().ln_1p())
            .sum();
        let value = Tensor::scalar(total / n);
        Ok(self.child(value, Op::BceWithLogitsMean { logits, targets }, &[logits, targets]))
    }

    /// Reverse pass from a scalar loss. Adds into any gradients already
    /// present; see the accumulation contract in the type docs.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let loss_value = &self.values[loss.0];
        if loss_value.numel() != 1 {
            return Err(TensorError::NotScalar {
                shape: loss_value.shape().to_vec(),
            });
        }
        let n = self.values.len();
        let mut flow: Vec<Option<Tensor>> = vec![None; n];
        flow[loss.0] = Some(Tensor::from_vec(vec![1.0], loss_value.shape())?);

        for id in (0..=loss.0).rev() {
            if !self.requires[id] {
                flow[id] = None;
                continue;
            }
            let Some(g) = flow[id].take() else { continue };
            self.propagate(id, &g, &mut flow)?;
            accumulate(&mut self.grads[id], g);
        }
        Ok(())
    }

    fn propagate(
        &self,
        id: usize,
        g: &Tensor,
        flow: &mut [Option<Tensor>],
    ) -> Result<(), TensorError> {
        let fault = self.fault.filter(|f| *f == self.ops[id].name());
        let mut first_parent: Option<usize> = None;
        let mut send = |parent: Var, mut t: Tensor, flow: &mut [Option<Tensor>]| {
            if !self.requires[parent.0] {
                return;
            }
            if fault.is_some() && first_parent.map_or(true, |p| p == parent.0) {
                first_parent = Some(parent.0);
                for v in t.data_mut() {
                    *v *= 1.02;
                }
            }
            accumulate(&mut flow[parent.0], t);
        };

        match &self.ops[id] {
            Op::Leaf => {}
            Op::Add(a, b) => {
                send(*a, g.clone(), flow);
                send(*b, g.clone(), flow);
            }
            Op::Sub(a, b) => {
                send(*a, g.clone(), flow);
                send(*b, g.map(|v| -v), flow);
            }
            Op::Mul(a, b) => {
                send(*a, g.zip_map(&self.values[b.0], |gv, bv| gv * bv)?, flow);
                send(*b, g.zip_map(&self.values[a.0], |gv, av| gv * av)?, flow);
            }
            Op::Scale(a, factor) => send(*a, g.map(|v| v * factor), flow),
            Op::AddBias(x, b) => {
                let c = self.values[b.0].numel();
                let mut db = vec![0.0; c];
                for row in g.data().chunks_exact(c) {
                    for (d, &v) in db.iter_mut().zip(row) {
                        *d += v;
                    }
                }
                send(*x, g.clone(), flow);
                send(*b, Tensor::from_vec(db, &[c])?, flow);
            }
            Op::SubCol(x, col) => {
                let neg_rows = g.row_sum()?.map(|v| -v);
                send(*x, g.clone(), flow);
                send(*col, neg_rows, flow);
            }
            Op::Matmul(a, b) => {
                let da = g.matmul_nt(&self.values[b.0])?;
                let db = self.values[a.0].matmul_tn(g)?;
                send(*a, da, flow);
                send(*b, db, flow);
            }
            Op::Permute(x, axes) => {
                let mut inv = vec![0usize; axes.len()];
                for (d, &a) in axes.iter().enumerate() {
                    inv[a] = d;
                }
                send(*x, g.permuted(&inv)?, flow);
            }
            Op::Reshape(x) => {
                send(*x, g.reshaped(self.values[x.0].shape())?, flow);
            }
            Op::Concat(xs, axis) => {
                let axis = *axis;
                let full = g.shape()[axis];
                let outer: usize = g.shape()[..axis].iter().product();
                let inner: usize = g.shape()[axis + 1..].iter().product();
                let mut offset = 0;
                for v in xs {
                    let shape = self.values[v.0].shape().to_vec();
                    let width = shape[axis] * inner;
                    let mut part = vec![0.0; shape.iter().product()];
                    for o in 0..outer {
                        let src = o * full * inner + offset;
                        part[o * width..(o + 1) * width]
                            .copy_from_slice(&g.data()[src..src + width]);
                    }
                    send(*v, Tensor::from_vec(part, &shape)?, flow);
                    offset += width;
                }
            }
            Op::MeanAxis(x, axis) => {
                let shape = self.values[x.0].shape().to_vec();
                let len = shape[*axis];
                let outer: usize = shape[..*axis].iter().product();
                let inner: usize = shape[*axis + 1..].iter().product();
                let scale = 1.0 / len as f64;
                let mut dx = vec![0.0; self.values[x.0].numel()];
                for o in 0..outer {
                    let grow = &g.data()[o * inner..(o + 1) * inner];
                    for l in 0..len {
                        let dst = (o * len + l) * inner;
                        for (d, &v) in dx[dst..dst + inner].iter_mut().zip(grow) {
                            *d = v * scale;
                        }
                    }
                }
                send(*x, Tensor::from_vec(dx, &shape)?, flow);
            }
            Op::RowSum(x) => {
                let shape = self.values[x.0].shape().to_vec();
                let cols = shape[1];
                let mut dx = vec![0.0; shape[0] * cols];
                for (row, &gv) in dx.chunks_exact_mut(cols).zip(g.data()) {
                    row.fill(gv);
                }
                send(*x, Tensor::from_vec(dx, &shape)?, flow);
            }
            Op::SumAll(x) => {
                let shape = self.values[x.0].shape().to_vec();
                send(*x, Tensor::full(&shape, g.item()), flow);
            }
            Op::Exp(x) => {
                send(*x, g.zip_map(&self.values[id], |gv, y| gv * y)?, flow);
            }
            Op::Log(x) => {
                send(*x, g.zip_map(&self.values[x.0], |gv, xv| gv / xv)?, flow);
            }
            Op::Gelu(x) => {
                send(*x, g.zip_map(&self.values[x.0], |gv, xv| gv * gelu_grad(xv))?, flow);
            }
            Op::Softmax(x) => {
                let y = &self.values[id];
                let c = *y.shape().last().unwrap();
                let mut dx = vec![0.0; y.numel()];
                for ((drow, yrow), grow) in dx
                    .chunks_exact_mut(c)
                    .zip(y.data().chunks_exact(c))
                    .zip(g.data().chunks_exact(c))
                {
                    let dot: f64 = yrow.iter().zip(grow).map(|(&yv, &gv)| yv * gv).sum();
                    for ((d, &yv), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                        *d = yv * (gv - dot);
                    }
                }
                send(*x, Tensor::from_vec(dx, y.shape())?, flow);
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let c = self.values[gamma.0].numel();
                let gamma_data = self.values[gamma.0].data();
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                let mut dx = vec![0.0; xhat.numel()];
                for (r, ((grow, hrow), drow)) in g
                    .data()
                    .chunks_exact(c)
                    .zip(xhat.data().chunks_exact(c))
                    .zip(dx.chunks_exact_mut(c))
                    .enumerate()
                {
                    let mut mean_h = 0.0;
                    let mut mean_hx = 0.0;
                    for i in 0..c {
                        let h = grow[i] * gamma_data[i];
                        mean_h += h;
                        mean_hx += h * hrow[i];
                        dgamma[i] += grow[i] * hrow[i];
                        dbeta[i] += grow[i];
                    }
                    mean_h /= c as f64;
                    mean_hx /= c as f64;
                    let istd = inv_std[r];
                    for i in 0..c {
                        let h = grow[i] * gamma_data[i];
                        drow[i] = istd * (h - mean_h - hrow[i] * mean_hx);
                    }
                }
                send(*x, Tensor::from_vec(dx, xhat.shape())?, flow);
                send(*gamma, Tensor::from_vec(dgamma, &[c])?, flow);
                send(*beta, Tensor::from_vec(dbeta, &[c])?, flow);
            }
            Op::L2NormalizeRows { x, inv_norm, valid } => {
                let y = &self.values[id];
                let c = *y.shape().last().unwrap();
                let mut dx = vec![0.0; y.numel()];
                for (r, ((drow, yrow), grow)) in dx
                    .chunks_exact_mut(c)
                    .zip(y.data().chunks_exact(c))
                    .zip(g.data().chunks_exact(c))
                    .enumerate()
                {
                    if valid[r] {
                        let dot: f64 = yrow.iter().zip(grow).map(|(&yv, &gv)| yv * gv).sum();
                        for ((d, &yv), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                            *d = inv_norm[r] * (gv - yv * dot);
                        }
                    } else {
                        drow.copy_from_slice(grow);
                    }
                }
                send(*x, Tensor::from_vec(dx, y.shape())?, flow);
            }
            Op::EmbeddingAdd { x, table } => {
                let xs = self.values[x.0].shape();
                let (bsz, t, d) = (xs[0], xs[1], xs[2]);
                let rows = self.values[table.0].shape()[0];
                let mut dt = vec![0.0; rows * d];
                for bi in 0..bsz {
                    for ti in 0..t {
                        let src = &g.data()[(bi * t + ti) * d..(bi * t + ti + 1) * d];
                        for (dv, &gv) in dt[ti * d..(ti + 1) * d].iter_mut().zip(src) {
                            *dv += gv;
                        }
                    }
                }
                send(*x, g.clone(), flow);
                send(*table, Tensor::from_vec(dt, &[rows, d])?, flow);
            }
            Op::Dropout { x, mask } => match mask {
                Some(m) => send(*x, g.zip_map(m, |gv, mv| gv * mv)?, flow),
                None => send(*x, g.clone(), flow),
            },
            Op::BceWithLogitsMean { logits, targets } => {
                let n = self.values[logits.0].numel() as f64;
                let gs = g.item();
                let dl = self.values[logits.0].zip_map(&self.values[targets.0], |l, y| {
                    gs * (sigmoid(l) - y) / n
                })?;
                send(*logits, dl, flow);
                let dt = self.values[logits.0].map(|l| -gs * l / n);
                send(*targets, dt, flow);
            }
        }
        Ok(())
    }
}

fn accumulate(slot: &mut Option<Tensor>, t: Tensor) {
    match slot {
        Some(existing) => existing.add_scaled(&t, 1.0),
        None => *slot = Some(t),
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

/// Tanh-form GELU.
fn gelu(x: f64) -> f64 {
    let u = SQRT_2_OVER_PI * (x + GELU_COEFF * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = SQRT_2_OVER_PI * (x + GELU_COEFF * x * x * x);
    let t = u.tanh();
    let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEFF * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}
