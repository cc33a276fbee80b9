// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimal reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! Every value is an `Array2<f64>`; scalars are `1 x 1`. A [`Tape`] records
//! operations in execution order, and [`Tape::backward`] walks it in reverse.
//! Only nodes that depend on a parameter leaf receive gradients.

use ndarray::{Array2, Axis};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulT(Var, Var),
    Add(Var, Var),
    /// `n x d` plus a broadcast `1 x d` row.
    AddRow(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Array2<f64>),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    /// `a * x + b` with `1 x 1` scalars `a` and `b`.
    ScalarAffine(Var, Var, Var),
    SoftmaxRows(Var),
    MeanRows(Var),
    SumRows(Var),
    MaxRows(Var, Vec<usize>),
    ConcatCols(Vec<Var>),
    CrossEntropy(Var, usize),
}

#[derive(Debug)]
struct Entry {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    entries: Vec<Entry>,
}

/// Gradients of a scalar output with respect to every recorded value.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<f64>> {
        self.grads[v.0].take()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.entries[v.0].needs_grad);
        self.entries.push(Entry { value, op, needs_grad });
        Var(self.entries.len() - 1)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Array2<f64>) -> Var {
        self.entries.push(Entry {
            value,
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.entries.len() - 1)
    }

    /// A constant leaf; no gradient flows into it.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.entries.push(Entry {
            value,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.entries.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.entries[v.0].value
    }

    /// Value of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.entries[v.0].value[[0, 0]]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        self.push(value, Op::MatMul(a, b), &[a, b])
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(&self.value(b).t());
        self.push(value, Op::MatMulT(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) + self.value(b);
        self.push(value, Op::Add(a, b), &[a, b])
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a 1 x d row");
        let value = self.value(a) + self.value(row);
        self.push(value, Op::AddRow(a, row), &[a, row])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) * self.value(b);
        self.push(value, Op::Mul(a, b), &[a, b])
    }

    pub fn mul_const(&mut self, a: Var, c: Array2<f64>) -> Var {
        let value = self.value(a) * &c;
        self.push(value, Op::MulConst(a, c), &[a])
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a) * s;
        self.push(value, Op::Scale(a, s), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(f64::tanh);
        self.push(value, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        self.push(value, Op::Sigmoid(a), &[a])
    }

    pub fn scalar_affine(&mut self, x: Var, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.scalar(a), self.scalar(b));
        let value = self.value(x).mapv(|v| sa * v + sb);
        self.push(value, Op::ScalarAffine(x, a, b), &[x, a, b])
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for mut row in value.rows_mut() {
            let m = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - m).exp());
            let s = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        self.push(value, Op::SoftmaxRows(a), &[a])
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let value = x.sum_axis(Axis(0)).insert_axis(Axis(0)) / x.nrows() as f64;
        self.push(value, Op::MeanRows(a), &[a])
    }

    pub fn sum_rows(&mut self, a: Var) -> Var {
        let value = self.value(a).sum_axis(Axis(0)).insert_axis(Axis(0));
        self.push(value, Op::SumRows(a), &[a])
    }

    /// Columnwise maximum; ties resolve to the first row.
    pub fn max_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut arg = vec![0usize; x.ncols()];
        let mut value = Array2::from_elem((1, x.ncols()), f64::NEG_INFINITY);
        for (i, row) in x.rows().into_iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > value[[0, j]] {
                    value[[0, j]] = v;
                    arg[j] = i;
                }
            }
        }
        self.push(value, Op::MaxRows(a, arg), &[a])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).expect("concat_cols: row counts differ");
        self.push(value, Op::ConcatCols(parts.to_vec()), parts)
    }

    /// Softmax cross-entropy of a `1 x C` logit row against class `target`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Var {
        let z = self.value(logits);
        assert_eq!(z.nrows(), 1);
        let m = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = m + z.mapv(|v| (v - m).exp()).sum().ln();
        let value = Array2::from_elem((1, 1), lse - z[[0, target]]);
        self.push(value, Op::CrossEntropy(logits, target), &[logits])
    }

    /// Back-propagates from the scalar `out`, seeded with gradient one.
    pub fn backward(&self, out: Var) -> Gradients {
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.entries.len()];
        grads[out.0] = Some(Array2::ones(self.entries[out.0].value.raw_dim()));
        for i in (0..=out.0).rev() {
            let entry = &self.entries[i];
            if !entry.needs_grad || matches!(entry.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let y = &entry.value;
            let mut acc = |v: Var, d: Array2<f64>| {
                if !self.entries[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => *existing += &d,
                    slot => *slot = Some(d),
                }
            };
            match &entry.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    acc(*a, g.dot(&self.value(*b).t()));
                    acc(*b, self.value(*a).t().dot(&g));
                }
                Op::MatMulT(a, b) => {
                    acc(*a, g.dot(self.value(*b)));
                    acc(*b, g.t().dot(self.value(*a)));
                }
                Op::Add(a, b) => {
                    acc(*b, g.clone());
                    acc(*a, g);
                }
                Op::AddRow(a, row) => {
                    acc(*row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(*a, g);
                }
                Op::Mul(a, b) => {
                    acc(*a, &g * self.value(*b));
                    acc(*b, &g * self.value(*a));
                }
                Op::MulConst(a, c) => acc(*a, &g * c),
                Op::Scale(a, s) => acc(*a, g * *s),
                Op::Tanh(a) => acc(*a, &g * &y.mapv(|t| 1.0 - t * t)),
                Op::Sigmoid(a) => acc(*a, &g * &y.mapv(|s| s * (1.0 - s))),
                Op::ScalarAffine(x, a, b) => {
                    let xv = self.value(*x);
                    acc(*a, Array2::from_elem((1, 1), (&g * xv).sum()));
                    acc(*b, Array2::from_elem((1, 1), g.sum()));
                    acc(*x, g * self.scalar(*a));
                }
                Op::SoftmaxRows(a) => {
                    // y ⊙ (g - rowsum(g ⊙ y))
                    let mut d = &g * y;
                    let sums = d.sum_axis(Axis(1));
                    for ((mut row, yr), s) in d.rows_mut().into_iter().zip(y.rows()).zip(sums.iter()) {
                        row.zip_mut_with(&yr, |o, &yv| *o -= yv * s);
                    }
                    acc(*a, d);
                }
                Op::MeanRows(a) => {
                    let n = self.value(*a).nrows();
                    let d = g / n as f64;
                    acc(*a, d.broadcast((n, d.ncols())).unwrap().to_owned());
                }
                Op::SumRows(a) => {
                    let n = self.value(*a).nrows();
                    acc(*a, g.broadcast((n, g.ncols())).unwrap().to_owned());
                }
                Op::MaxRows(a, arg) => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    for (j, &i) in arg.iter().enumerate() {
                        d[[i, j]] = g[[0, j]];
                    }
                    acc(*a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        acc(*p, g.slice(ndarray::s![.., offset..offset + w]).to_owned());
                        offset += w;
                    }
                }
                Op::CrossEntropy(logits, target) => {
                    let z = self.value(*logits);
                    let m = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    let e = z.mapv(|v| (v - m).exp());
                    let mut d = &e / e.sum();
                    d[[0, *target]] -= 1.0;
                    acc(*logits, d * g[[0, 0]]);
                }
            }
        }
        Gradients { grads }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
