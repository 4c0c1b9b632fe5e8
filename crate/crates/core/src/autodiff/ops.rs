//! Forward definitions and backward rules for every recorded op.

use std::rc::Rc;

use super::tape::{accumulate, Node, Op, Var};
use crate::error::{shape_err, Result};
use crate::linalg;
use crate::tensor::{matmul_nt_into, matmul_tn_into, Tensor};

/// Singular-value gaps below this are clamped (sign preserved) in the SVD
/// adjoint; gradients are approximate for near-degenerate spectra.
pub const SVD_GAP_CLAMP: f64 = 1e-8;

impl<'t> Var<'t> {
    fn unary(&self, value: Tensor, op: Op) -> Var<'t> {
        self.tape.push(value, op, self.needs_grad())
    }

    fn binary(&self, other: Var<'t>, value: Tensor, op: Op) -> Var<'t> {
        let ng = self.needs_grad() || other.needs_grad();
        self.tape.push(value, op, ng)
    }

    fn same_dims(&self, other: Var<'t>, op: &'static str) -> Result<()> {
        let (a, b) = (self.dims(), other.dims());
        if a != b {
            return Err(shape_err(op, format!("{a:?} vs {b:?}")));
        }
        Ok(())
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_dims(other, "add")?;
        let v = self.with_value(|a| other.with_value(|b| a.zip_map(b, |x, y| x + y)))?;
        Ok(self.binary(other, v, Op::Add(self.id, other.id)))
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_dims(other, "sub")?;
        let v = self.with_value(|a| other.with_value(|b| a.zip_map(b, |x, y| x - y)))?;
        Ok(self.binary(other, v, Op::Sub(self.id, other.id)))
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_dims(other, "mul")?;
        let v = self.with_value(|a| other.with_value(|b| a.zip_map(b, |x, y| x * y)))?;
        Ok(self.binary(other, v, Op::Mul(self.id, other.id)))
    }

    /// Adds a `1×n` row to every row of an `m×n` value.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        let (m, n) = self.dims();
        if row.dims() != (1, n) {
            return Err(shape_err(
                "add_row",
                format!("({m}, {n}) + {:?}", row.dims()),
            ));
        }
        let v = self.with_value(|a| {
            row.with_value(|r| {
                let mut out = a.clone();
                for i in 0..m {
                    for j in 0..n {
                        out.data_mut()[i * n + j] += r.data()[j];
                    }
                }
                out.requires_grad = false;
                out
            })
        });
        Ok(self.binary(row, v, Op::AddRow(self.id, row.id)))
    }

    /// Scales row `i` of an `m×n` value by entry `i` of an `m×1` column.
    pub fn mul_col(self, col: Var<'t>) -> Result<Var<'t>> {
        let (m, n) = self.dims();
        if col.dims() != (m, 1) {
            return Err(shape_err(
                "mul_col",
                format!("({m}, {n}) * {:?}", col.dims()),
            ));
        }
        let v = self.with_value(|a| {
            col.with_value(|c| {
                let mut out = Tensor::zeros(m, n);
                for i in 0..m {
                    let s = c.data()[i];
                    for j in 0..n {
                        out.data_mut()[i * n + j] = a.data()[i * n + j] * s;
                    }
                }
                out
            })
        });
        Ok(self.binary(col, v, Op::MulCol(self.id, col.id)))
    }

    pub fn scale(self, s: f64) -> Var<'t> {
        let v = self.with_value(|a| a.scale(s));
        self.unary(v, Op::Scale(self.id, s))
    }

    pub fn add_scalar(self, s: f64) -> Var<'t> {
        let v = self.with_value(|a| a.map(|x| x + s));
        self.unary(v, Op::AddScalar(self.id))
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        let v = self.with_value(|a| other.with_value(|b| a.matmul(b)))?;
        Ok(self.binary(other, v, Op::MatMul(self.id, other.id)))
    }

    pub fn transpose(self) -> Var<'t> {
        let v = self.with_value(Tensor::transpose);
        self.unary(v, Op::Transpose(self.id))
    }

    pub fn exp(self) -> Var<'t> {
        let v = self.with_value(|a| a.map(f64::exp));
        self.unary(v, Op::Exp(self.id))
    }

    pub fn leaky_relu(self, slope: f64) -> Var<'t> {
        let v = self.with_value(|a| a.map(|x| if x > 0.0 { x } else { slope * x }));
        self.unary(v, Op::LeakyRelu(self.id, slope))
    }

    /// `max(0, x)`.
    pub fn relu(self) -> Var<'t> {
        self.leaky_relu(0.0)
    }

    pub fn sum(self) -> Var<'t> {
        let v = self.with_value(|a| Tensor::scalar(a.sum()));
        self.unary(v, Op::SumAll(self.id))
    }

    pub fn mean(self) -> Var<'t> {
        let n = self.with_value(Tensor::len).max(1);
        self.sum().scale(1.0 / n as f64)
    }

    /// Column sums: `m×n -> 1×n`.
    pub fn sum_rows(self) -> Var<'t> {
        let v = self.with_value(|a| {
            let (m, n) = a.dims();
            let mut out = Tensor::zeros(1, n);
            for i in 0..m {
                for j in 0..n {
                    out.data_mut()[j] += a.data()[i * n + j];
                }
            }
            out
        });
        self.unary(v, Op::SumRows(self.id))
    }

    /// Column means: `m×n -> 1×n`.
    pub fn mean_rows(self) -> Var<'t> {
        let m = self.dims().0.max(1);
        self.sum_rows().scale(1.0 / m as f64)
    }

    /// Row sums: `m×n -> m×1`.
    pub fn sum_cols(self) -> Var<'t> {
        let v = self.with_value(|a| {
            let (m, n) = a.dims();
            let mut out = Tensor::zeros(m, 1);
            for i in 0..m {
                out.data_mut()[i] = a.row(i).iter().take(n).sum();
            }
            out
        });
        self.unary(v, Op::SumCols(self.id))
    }

    /// Row means: `m×n -> m×1`.
    pub fn mean_cols(self) -> Var<'t> {
        let n = self.dims().1.max(1);
        self.sum_cols().scale(1.0 / n as f64)
    }

    /// Softmax along each row.
    pub fn softmax_rows(self) -> Var<'t> {
        let v = self.with_value(softmax_rows_value);
        self.unary(v, Op::SoftmaxRows(self.id))
    }

    /// Softmax down each column.
    pub fn softmax_cols(self) -> Var<'t> {
        let v = self.with_value(|a| softmax_rows_value(&a.transpose()).transpose());
        self.unary(v, Op::SoftmaxCols(self.id))
    }

    /// Normalizes each row to zero mean and unit variance (no affine part).
    pub fn layer_norm_rows(self, eps: f64) -> Var<'t> {
        let v = self.with_value(|a| layer_norm_value(a, eps).0);
        self.unary(v, Op::LayerNormRows(self.id, eps))
    }

    /// Horizontal concatenation of values with equal row counts.
    pub fn concat_cols(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts
            .first()
            .ok_or_else(|| shape_err("concat_cols", "no inputs"))?;
        let m = first.dims().0;
        let dims: Vec<(usize, usize)> = parts.iter().map(Var::dims).collect();
        if dims.iter().any(|d| d.0 != m) {
            return Err(shape_err("concat_cols", format!("row counts {dims:?}")));
        }
        let total: usize = dims.iter().map(|d| d.1).sum();
        let mut out = Tensor::zeros(m, total);
        let mut offset = 0;
        for (p, &(_, n)) in parts.iter().zip(&dims) {
            p.with_value(|a| {
                for i in 0..m {
                    out.data_mut()[i * total + offset..i * total + offset + n]
                        .copy_from_slice(a.row(i));
                }
            });
            offset += n;
        }
        let ng = parts.iter().any(Var::needs_grad);
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first.tape.push(out, Op::ConcatCols(ids), ng))
    }

    /// Selects rows by index (repeats allowed).
    pub fn gather_rows(self, index: Rc<[usize]>) -> Result<Var<'t>> {
        let (m, n) = self.dims();
        if let Some(&bad) = index.iter().find(|&&i| i >= m) {
            return Err(shape_err("gather_rows", format!("index {bad} out of {m} rows")));
        }
        let v = self.with_value(|a| {
            let mut out = Tensor::zeros(index.len(), n);
            for (r, &i) in index.iter().enumerate() {
                out.data_mut()[r * n..(r + 1) * n].copy_from_slice(a.row(i));
            }
            out
        });
        Ok(self.unary(v, Op::GatherRows(self.id, index)))
    }

    /// Sums row `e` into output row `index[e]`; output has `rows` rows.
    pub fn scatter_add_rows(self, index: Rc<[usize]>, rows: usize) -> Result<Var<'t>> {
        let (m, n) = self.dims();
        if index.len() != m {
            return Err(shape_err(
                "scatter_add_rows",
                format!("{} indices for {m} rows", index.len()),
            ));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(shape_err(
                "scatter_add_rows",
                format!("target {bad} out of {rows} rows"),
            ));
        }
        let v = self.with_value(|a| {
            let mut out = Tensor::zeros(rows, n);
            for (e, &i) in index.iter().enumerate() {
                for j in 0..n {
                    out.data_mut()[i * n + j] += a.data()[e * n + j];
                }
            }
            out
        });
        Ok(self.unary(v, Op::ScatterAddRows(self.id, index)))
    }

    /// Squared Euclidean norm of each row: `m×n -> m×1`.
    pub fn row_sq_norm(self) -> Var<'t> {
        let v = self.with_value(|a| {
            let m = a.rows();
            let mut out = Tensor::zeros(m, 1);
            for i in 0..m {
                out.data_mut()[i] = a.row(i).iter().map(|x| x * x).sum();
            }
            out
        });
        self.unary(v, Op::RowSqNorm(self.id))
    }

    /// Pairwise squared distances between rows: `n×c, m×c -> n×m`.
    pub fn sq_dist(self, other: Var<'t>) -> Result<Var<'t>> {
        let (n, c) = self.dims();
        let (m, c2) = other.dims();
        if c != c2 {
            return Err(shape_err("sq_dist", format!("({n}, {c}) vs ({m}, {c2})")));
        }
        let v = self.with_value(|a| {
            other.with_value(|b| {
                let mut out = Tensor::zeros(n, m);
                for i in 0..n {
                    let ai = a.row(i);
                    for j in 0..m {
                        let bj = b.row(j);
                        out.data_mut()[i * m + j] =
                            ai.iter().zip(bj).map(|(x, y)| (x - y) * (x - y)).sum();
                    }
                }
                out
            })
        });
        Ok(self.binary(other, v, Op::SqDist(self.id, other.id)))
    }

    /// `log Σ_j exp(x_ij)` per row, stabilized by the row maximum: `m×n -> m×1`.
    pub fn logsumexp_rows(self) -> Var<'t> {
        let v = self.with_value(|a| {
            let m = a.rows();
            let mut out = Tensor::zeros(m, 1);
            for i in 0..m {
                out.data_mut()[i] = logsumexp(a.row(i));
            }
            out
        });
        self.unary(v, Op::LogSumExpRows(self.id))
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Result<Var<'t>> {
        let v = self.value().reshaped(vec![rows, cols])?;
        Ok(self.unary(v, Op::Reshape(self.id)))
    }

    /// Columns `start..end`.
    pub fn slice_cols(self, start: usize, end: usize) -> Result<Var<'t>> {
        let (m, n) = self.dims();
        if start > end || end > n {
            return Err(shape_err(
                "slice_cols",
                format!("{start}..{end} of {n} columns"),
            ));
        }
        let w = end - start;
        let v = self.with_value(|a| {
            let mut out = Tensor::zeros(m, w);
            for i in 0..m {
                out.data_mut()[i * w..(i + 1) * w].copy_from_slice(&a.row(i)[start..end]);
            }
            out
        });
        Ok(self.unary(v, Op::SliceCols(self.id, start)))
    }

    /// Differentiable SVD of a `3×3` value.
    pub fn svd3(self) -> Result<Svd3Vars<'t>> {
        if self.dims() != (3, 3) {
            return Err(shape_err("svd3", format!("expected (3, 3), got {:?}", self.dims())));
        }
        let d = linalg::svd3(&self.with_value(to_mat3))?;
        let mut packed = Tensor::zeros(3, 7);
        for i in 0..3 {
            for j in 0..3 {
                packed.set(i, j, d.u[i][j]);
                packed.set(i, 4 + j, d.v[i][j]);
            }
            packed.set(i, 3, d.s[i]);
        }
        let node = self.unary(packed, Op::Svd3(self.id));
        Ok(Svd3Vars {
            u: node.slice_cols(0, 3)?,
            s: node.slice_cols(3, 4)?,
            v: node.slice_cols(4, 7)?,
        })
    }
}

/// Outputs of [`Var::svd3`]; `s` is a `3×1` column in descending order.
#[derive(Debug, Clone, Copy)]
pub struct Svd3Vars<'t> {
    pub u: Var<'t>,
    pub s: Var<'t>,
    pub v: Var<'t>,
}

pub(crate) fn to_mat3(t: &Tensor) -> linalg::Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = t.get(i, j);
        }
    }
    m
}

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn softmax_rows_value(a: &Tensor) -> Tensor {
    let (m, n) = a.dims();
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        let row = a.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for j in 0..n {
            let e = (row[j] - max).exp();
            out.data_mut()[i * n + j] = e;
            total += e;
        }
        for j in 0..n {
            out.data_mut()[i * n + j] /= total;
        }
    }
    out
}

/// Returns normalized rows and per-row inverse standard deviations.
fn layer_norm_value(a: &Tensor, eps: f64) -> (Tensor, Vec<f64>) {
    let (m, n) = a.dims();
    let mut out = Tensor::zeros(m, n);
    let mut inv_std = Vec::with_capacity(m);
    for i in 0..m {
        let row = a.row(i);
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let is = 1.0 / (var + eps).sqrt();
        for j in 0..n {
            out.data_mut()[i * n + j] = (row[j] - mean) * is;
        }
        inv_std.push(is);
    }
    (out, inv_std)
}

fn softmax_rows_backward(y: &Tensor, g: &Tensor) -> Tensor {
    let (m, n) = y.dims();
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        let (yr, gr) = (y.row(i), g.row(i));
        let dotp: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for j in 0..n {
            out.data_mut()[i * n + j] = yr[j] * (gr[j] - dotp);
        }
    }
    out
}

fn mat3_to_tensor(m: &linalg::Mat3) -> Tensor {
    Tensor::matrix(3, 3, m.iter().flatten().copied().collect()).expect("3x3")
}

/// Adjoint of `A = U S Vᵀ` for a square full SVD:
/// `Ā = U [ (F∘(UᵀŪ − ŪᵀU)) S + diag(S̄) + S (F∘(VᵀV̄ − V̄ᵀV)) ] Vᵀ`
/// with `F_ij = 1/(s_j² − s_i²)` off the diagonal.
fn svd3_backward(packed: &Tensor, g: &Tensor) -> Tensor {
    let mut u = [[0.0; 3]; 3];
    let mut v = [[0.0; 3]; 3];
    let mut gu = [[0.0; 3]; 3];
    let mut gv = [[0.0; 3]; 3];
    let mut s = [0.0; 3];
    let mut gs = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            u[i][j] = packed.get(i, j);
            v[i][j] = packed.get(i, 4 + j);
            gu[i][j] = g.get(i, j);
            gv[i][j] = g.get(i, 4 + j);
        }
        s[i] = packed.get(i, 3);
        gs[i] = g.get(i, 3);
    }
    let mut f = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let mut gap = s[j] * s[j] - s[i] * s[i];
                if gap.abs() < SVD_GAP_CLAMP {
                    gap = if gap < 0.0 { -SVD_GAP_CLAMP } else { SVD_GAP_CLAMP };
                }
                f[i][j] = 1.0 / gap;
            }
        }
    }
    let ut_gu = linalg::mat_mul(&linalg::transpose(&u), &gu);
    let vt_gv = linalg::mat_mul(&linalg::transpose(&v), &gv);
    let mut inner = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let ju = f[i][j] * (ut_gu[i][j] - ut_gu[j][i]);
            let jv = f[i][j] * (vt_gv[i][j] - vt_gv[j][i]);
            inner[i][j] = ju * s[j] + s[i] * jv;
        }
        inner[i][i] += gs[i];
    }
    let ga = linalg::mat_mul(&linalg::mat_mul(&u, &inner), &linalg::transpose(&v));
    mat3_to_tensor(&ga)
}

/// Propagates `g` (gradient of node `id`) into the node's inputs.
pub(crate) fn backprop(nodes: &[Node], id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
    let val = |i: usize| &nodes[i].value;
    let wants = |i: usize| nodes[i].needs_grad;
    match &nodes[id].op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            if wants(*a) {
                accumulate(grads, *a, g.clone());
            }
            if wants(*b) {
                accumulate(grads, *b, g.clone());
            }
        }
        Op::Sub(a, b) => {
            if wants(*a) {
                accumulate(grads, *a, g.clone());
            }
            if wants(*b) {
                accumulate(grads, *b, g.scale(-1.0));
            }
        }
        Op::Mul(a, b) => {
            if wants(*a) {
                accumulate(grads, *a, g.zip_map(val(*b), |x, y| x * y).unwrap());
            }
            if wants(*b) {
                accumulate(grads, *b, g.zip_map(val(*a), |x, y| x * y).unwrap());
            }
        }
        Op::AddRow(a, r) => {
            if wants(*a) {
                accumulate(grads, *a, g.clone());
            }
            if wants(*r) {
                let (m, n) = g.dims();
                let mut gr = Tensor::zeros(1, n);
                for i in 0..m {
                    for j in 0..n {
                        gr.data_mut()[j] += g.data()[i * n + j];
                    }
                }
                accumulate(grads, *r, gr);
            }
        }
        Op::MulCol(a, c) => {
            let (m, n) = g.dims();
            if wants(*a) {
                let cv = val(*c);
                let mut ga = g.clone();
                for i in 0..m {
                    for j in 0..n {
                        ga.data_mut()[i * n + j] *= cv.data()[i];
                    }
                }
                accumulate(grads, *a, ga);
            }
            if wants(*c) {
                let av = val(*a);
                let mut gc = Tensor::zeros(m, 1);
                for i in 0..m {
                    gc.data_mut()[i] = g.row(i).iter().zip(av.row(i)).map(|(x, y)| x * y).sum();
                }
                accumulate(grads, *c, gc);
            }
        }
        Op::Scale(a, s) => accumulate(grads, *a, g.scale(*s)),
        Op::AddScalar(a) => accumulate(grads, *a, g.clone()),
        Op::MatMul(a, b) => {
            let (m, k) = val(*a).dims();
            let n = val(*b).cols();
            if wants(*a) {
                let mut ga = Tensor::zeros(m, k);
                matmul_nt_into(g.data(), val(*b).data(), ga.data_mut(), m, n, k);
                accumulate(grads, *a, ga);
            }
            if wants(*b) {
                let mut gb = Tensor::zeros(k, n);
                matmul_tn_into(val(*a).data(), g.data(), gb.data_mut(), m, k, n);
                accumulate(grads, *b, gb);
            }
        }
        Op::Transpose(a) => accumulate(grads, *a, g.transpose()),
        Op::Exp(a) => {
            accumulate(grads, *a, g.zip_map(&nodes[id].value, |x, y| x * y).unwrap());
        }
        Op::LeakyRelu(a, slope) => {
            let ga = g
                .zip_map(val(*a), |gx, x| if x > 0.0 { gx } else { slope * gx })
                .unwrap();
            accumulate(grads, *a, ga);
        }
        Op::SumAll(a) => {
            let (m, n) = val(*a).dims();
            accumulate(grads, *a, Tensor::filled(m, n, g.data()[0]));
        }
        Op::SumRows(a) => {
            let (m, n) = val(*a).dims();
            let mut ga = Tensor::zeros(m, n);
            for i in 0..m {
                ga.data_mut()[i * n..(i + 1) * n].copy_from_slice(g.data());
            }
            accumulate(grads, *a, ga);
        }
        Op::SumCols(a) => {
            let (m, n) = val(*a).dims();
            let mut ga = Tensor::zeros(m, n);
            for i in 0..m {
                ga.data_mut()[i * n..(i + 1) * n].fill(g.data()[i]);
            }
            accumulate(grads, *a, ga);
        }
        Op::SoftmaxRows(a) => {
            accumulate(grads, *a, softmax_rows_backward(&nodes[id].value, g));
        }
        Op::SoftmaxCols(a) => {
            let ga = softmax_rows_backward(&nodes[id].value.transpose(), &g.transpose());
            accumulate(grads, *a, ga.transpose());
        }
        Op::LayerNormRows(a, eps) => {
            let (xhat, inv_std) = layer_norm_value(val(*a), *eps);
            let (m, n) = g.dims();
            let mut ga = Tensor::zeros(m, n);
            for i in 0..m {
                let (gr, xr) = (g.row(i), xhat.row(i));
                let mg = gr.iter().sum::<f64>() / n as f64;
                let mgx = gr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                for j in 0..n {
                    ga.data_mut()[i * n + j] = inv_std[i] * (gr[j] - mg - xr[j] * mgx);
                }
            }
            accumulate(grads, *a, ga);
        }
        Op::ConcatCols(ids) => {
            let (m, total) = g.dims();
            let mut offset = 0;
            for &p in ids {
                let n = val(p).cols();
                if wants(p) {
                    let mut gp = Tensor::zeros(m, n);
                    for i in 0..m {
                        gp.data_mut()[i * n..(i + 1) * n]
                            .copy_from_slice(&g.data()[i * total + offset..i * total + offset + n]);
                    }
                    accumulate(grads, p, gp);
                }
                offset += n;
            }
        }
        Op::GatherRows(a, index) => {
            let (m, n) = val(*a).dims();
            let mut ga = Tensor::zeros(m, n);
            for (r, &i) in index.iter().enumerate() {
                for j in 0..n {
                    ga.data_mut()[i * n + j] += g.data()[r * n + j];
                }
            }
            accumulate(grads, *a, ga);
        }
        Op::ScatterAddRows(a, index) => {
            let (m, n) = val(*a).dims();
            let mut ga = Tensor::zeros(m, n);
            for (e, &i) in index.iter().enumerate() {
                ga.data_mut()[e * n..(e + 1) * n].copy_from_slice(g.row(i));
            }
            accumulate(grads, *a, ga);
        }
        Op::RowSqNorm(a) => {
            let av = val(*a);
            let (m, n) = av.dims();
            let mut ga = Tensor::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    ga.data_mut()[i * n + j] = 2.0 * g.data()[i] * av.data()[i * n + j];
                }
            }
            accumulate(grads, *a, ga);
        }
        Op::SqDist(a, b) => {
            let (av, bv) = (val(*a), val(*b));
            let (n, c) = av.dims();
            let m = bv.rows();
            let mut ga = Tensor::zeros(n, c);
            let mut gb = Tensor::zeros(m, c);
            for i in 0..n {
                for j in 0..m {
                    let w = 2.0 * g.data()[i * m + j];
                    if w == 0.0 {
                        continue;
                    }
                    for k in 0..c {
                        let d = w * (av.data()[i * c + k] - bv.data()[j * c + k]);
                        ga.data_mut()[i * c + k] += d;
                        gb.data_mut()[j * c + k] -= d;
                    }
                }
            }
            if wants(*a) {
                accumulate(grads, *a, ga);
            }
            if wants(*b) {
                accumulate(grads, *b, gb);
            }
        }
        Op::LogSumExpRows(a) => {
            let sm = softmax_rows_value(val(*a));
            let (m, n) = sm.dims();
            let mut ga = sm;
            for i in 0..m {
                for j in 0..n {
                    ga.data_mut()[i * n + j] *= g.data()[i];
                }
            }
            accumulate(grads, *a, ga);
        }
        Op::Reshape(a) => {
            let ga = g.clone().reshaped(val(*a).shape().to_vec()).unwrap();
            accumulate(grads, *a, ga);
        }
        Op::SliceCols(a, start) => {
            let (m, n) = val(*a).dims();
            let w = g.cols();
            let mut ga = Tensor::zeros(m, n);
            for i in 0..m {
                ga.data_mut()[i * n + start..i * n + start + w].copy_from_slice(g.row(i));
            }
            accumulate(grads, *a, ga);
        }
        Op::Svd3(a) => {
            accumulate(grads, *a, svd3_backward(&nodes[id].value, g));
        }
    }
}
