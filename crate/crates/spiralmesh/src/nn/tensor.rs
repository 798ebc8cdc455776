//! Tape-based reverse-mode differentiation over dense 2-D tensors.
//!
//! Every tensor is a row-major `(rows, cols)` matrix of f64 (scalars are
//! 1x1). A [`Tape`] owns all values and gradients for one forward pass;
//! operations append nodes and return [`TensorId`] handles, and
//! [`Tape::backward`] walks the nodes once in reverse creation order (which
//! is a reverse topological order, since ops only consume earlier ids).
//! Training code builds a fresh tape per step, so memory is bounded by one
//! pass.
//!
//! Mesh batches fold the batch axis into the rows: a batch of B meshes with
//! m vertices and w features is a `(B*m, w)` tensor, sample-major. The
//! structured ops (spiral gather, pooling, Laplacian) apply per sample.

use std::rc::Rc;

use crate::hierarchy::UpEntry;
use crate::spiral::{SpiralTable, PAD};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

/// Immutable per-model plan for the spiral gather: the table entries plus
/// the input feature width.
#[derive(Debug)]
pub struct GatherPlan {
    pub entries: Vec<i32>,
    pub m: usize,
    pub l: usize,
}

impl GatherPlan {
    pub fn from_table(table: &SpiralTable) -> Rc<GatherPlan> {
        Rc::new(GatherPlan {
            entries: table.entries().to_vec(),
            m: table.vertex_count(),
            l: table.length(),
        })
    }
}

/// Sparse symmetric operator in CSR form (the rescaled Laplacian).
#[derive(Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Dense `n x n` materialization (test oracle).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[i * self.n + self.col_idx[k] as usize] = self.values[k];
            }
        }
        out
    }
}

/// Row-selection plan (pooling) from a parent level to a child level.
#[derive(Debug)]
pub struct SelectPlan {
    pub kept: Vec<u32>,
    pub parent_m: usize,
}

/// Barycentric upsampling plan from a child level to a parent level.
#[derive(Debug)]
pub struct UpsamplePlan {
    pub entries: Vec<UpEntry>,
    pub child_m: usize,
}

enum Op {
    Leaf,
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Scale(TensorId, f64),
    Matmul(TensorId, TensorId),
    AddRowBias(TensorId, TensorId),
    Elu(TensorId),
    Sum(TensorId),
    MeanAbsDiff(TensorId, TensorId),
    GatherSpiral(TensorId, Rc<GatherPlan>),
    SelectRows(TensorId, Rc<SelectPlan>),
    UpsampleRows(TensorId, Rc<UpsamplePlan>),
    LaplacianApply(TensorId, Rc<Csr>),
    Reshape(TensorId),
    ConcatCols(Vec<TensorId>),
}

struct Node {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    fn push(&mut self, rows: usize, cols: usize, data: Vec<f64>, op: Op, needs_grad: bool) -> TensorId {
        debug_assert_eq!(data.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            data,
            op,
            needs_grad,
        });
        TensorId(self.nodes.len() - 1)
    }

    fn needs(&self, id: TensorId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Inserts a constant (non-differentiated) tensor.
    pub fn constant(&mut self, data: Vec<f64>, rows: usize, cols: usize) -> TensorId {
        self.push(rows, cols, data, Op::Leaf, false)
    }

    /// Inserts a differentiable leaf (parameter or traced input).
    pub fn leaf(&mut self, data: Vec<f64>, rows: usize, cols: usize) -> TensorId {
        self.push(rows, cols, data, Op::Leaf, true)
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].data
    }

    pub fn scalar(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.shape(id), (1, 1));
        self.nodes[id.0].data[0]
    }

    // -- elementwise and linear ops -------------------------------------

    pub fn add(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (r, c) = self.shape(a);
        assert_eq!((r, c), self.shape(b), "add: shape mismatch");
        let data = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| x + y)
            .collect();
        let needs = self.needs(a) || self.needs(b);
        self.push(r, c, data, Op::Add(a, b), needs)
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (r, c) = self.shape(a);
        assert_eq!((r, c), self.shape(b), "sub: shape mismatch");
        let data = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| x - y)
            .collect();
        let needs = self.needs(a) || self.needs(b);
        self.push(r, c, data, Op::Sub(a, b), needs)
    }

    pub fn scale(&mut self, a: TensorId, s: f64) -> TensorId {
        let (r, c) = self.shape(a);
        let data = self.nodes[a.0].data.iter().map(|&x| s * x).collect();
        let needs = self.needs(a);
        self.push(r, c, data, Op::Scale(a, s), needs)
    }

    /// `(n, k) x (k, m) -> (n, m)`.
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (n, k) = self.shape(a);
        let (k2, m) = self.shape(b);
        assert_eq!(k, k2, "matmul: inner dimensions {k} vs {k2}");
        let mut out = vec![0.0; n * m];
        matmul_nn(&self.nodes[a.0].data, &self.nodes[b.0].data, n, k, m, &mut out);
        let needs = self.needs(a) || self.needs(b);
        self.push(n, m, out, Op::Matmul(a, b), needs)
    }

    /// Adds a `(1, m)` bias row to every row of a `(n, m)` tensor.
    pub fn add_row_bias(&mut self, a: TensorId, bias: TensorId) -> TensorId {
        let (n, m) = self.shape(a);
        assert_eq!(self.shape(bias), (1, m), "bias must be (1, {m})");
        let mut data = self.nodes[a.0].data.clone();
        for row in data.chunks_exact_mut(m) {
            for (x, &b) in row.iter_mut().zip(&self.nodes[bias.0].data) {
                *x += b;
            }
        }
        let needs = self.needs(a) || self.needs(bias);
        self.push(n, m, data, Op::AddRowBias(a, bias), needs)
    }

    /// Exponential linear unit with alpha = 1.
    pub fn elu(&mut self, a: TensorId) -> TensorId {
        let (r, c) = self.shape(a);
        let data = self.nodes[a.0]
            .data
            .iter()
            .map(|&x| if x > 0.0 { x } else { x.exp() - 1.0 })
            .collect();
        let needs = self.needs(a);
        self.push(r, c, data, Op::Elu(a), needs)
    }

    pub fn sum(&mut self, a: TensorId) -> TensorId {
        let total: f64 = self.nodes[a.0].data.iter().sum();
        let needs = self.needs(a);
        self.push(1, 1, vec![total], Op::Sum(a), needs)
    }

    /// Mean absolute difference over all entries (the training loss).
    pub fn mean_abs_diff(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (r, c) = self.shape(a);
        assert_eq!((r, c), self.shape(b), "mean_abs_diff: shape mismatch");
        let n = (r * c) as f64;
        let total: f64 = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| (x - y).abs())
            .sum();
        let needs = self.needs(a) || self.needs(b);
        self.push(1, 1, vec![total / n], Op::MeanAbsDiff(a, b), needs)
    }

    // -- mesh-structured ops ---------------------------------------------

    /// Expands `(B*m, w)` features into `(B*m, L*w)` spiral neighbourhoods:
    /// row `b*m + x` holds the features of `S_1(x) .. S_L(x)` concatenated,
    /// with PAD entries contributing zero blocks.
    pub fn gather_spiral(&mut self, a: TensorId, plan: &Rc<GatherPlan>) -> TensorId {
        let (rows, w) = self.shape(a);
        assert_eq!(rows % plan.m, 0, "rows {rows} not a multiple of m {}", plan.m);
        let batch = rows / plan.m;
        let l = plan.l;
        let mut out = vec![0.0; rows * l * w];
        let src = &self.nodes[a.0].data;
        for b in 0..batch {
            let base = b * plan.m;
            for x in 0..plan.m {
                let spiral = &plan.entries[x * l..(x + 1) * l];
                let dst = &mut out[(base + x) * l * w..(base + x + 1) * l * w];
                for (slot, &e) in spiral.iter().enumerate() {
                    if e == PAD {
                        continue; // stays zero
                    }
                    let srow = &src[(base + e as usize) * w..(base + e as usize + 1) * w];
                    dst[slot * w..(slot + 1) * w].copy_from_slice(srow);
                }
            }
        }
        let needs = self.needs(a);
        self.push(rows, l * w, out, Op::GatherSpiral(a, Rc::clone(plan)), needs)
    }

    /// Pooling: keeps the rows listed in the plan, per sample.
    pub fn select_rows(&mut self, a: TensorId, plan: &Rc<SelectPlan>) -> TensorId {
        let (rows, w) = self.shape(a);
        assert_eq!(rows % plan.parent_m, 0, "rows not a multiple of parent m");
        let batch = rows / plan.parent_m;
        let child_m = plan.kept.len();
        let mut out = Vec::with_capacity(batch * child_m * w);
        let src = &self.nodes[a.0].data;
        for b in 0..batch {
            let base = b * plan.parent_m;
            for &v in &plan.kept {
                let row = &src[(base + v as usize) * w..(base + v as usize + 1) * w];
                out.extend_from_slice(row);
            }
        }
        let needs = self.needs(a);
        self.push(batch * child_m, w, out, Op::SelectRows(a, Rc::clone(plan)), needs)
    }

    /// Unpooling: every parent row is the barycentric combination of its
    /// three mapped child rows, per sample.
    pub fn upsample_rows(&mut self, a: TensorId, plan: &Rc<UpsamplePlan>) -> TensorId {
        let (rows, w) = self.shape(a);
        assert_eq!(rows % plan.child_m, 0, "rows not a multiple of child m");
        let batch = rows / plan.child_m;
        let parent_m = plan.entries.len();
        let mut out = vec![0.0; batch * parent_m * w];
        let src = &self.nodes[a.0].data;
        for b in 0..batch {
            let src_base = b * plan.child_m;
            let dst_base = b * parent_m;
            for (v, e) in plan.entries.iter().enumerate() {
                // Affine form (w0 implied as 1 - w1 - w2): exact for
                // constants and for kept vertices where w1 = w2 = 0.
                let [i0, i1, i2] = e.tri.map(|c| (src_base + c as usize) * w);
                let [_, w1, w2] = e.weights;
                for k in 0..w {
                    let f0 = src[i0 + k];
                    out[(dst_base + v) * w + k] =
                        f0 + w1 * (src[i1 + k] - f0) + w2 * (src[i2 + k] - f0);
                }
            }
        }
        let needs = self.needs(a);
        self.push(
            batch * parent_m,
            w,
            out,
            Op::UpsampleRows(a, Rc::clone(plan)),
            needs,
        )
    }

    /// Applies a sparse symmetric operator per sample block.
    pub fn laplacian_apply(&mut self, a: TensorId, lap: &Rc<Csr>) -> TensorId {
        let (rows, w) = self.shape(a);
        assert_eq!(rows % lap.n, 0, "rows not a multiple of operator size");
        let batch = rows / lap.n;
        let mut out = vec![0.0; rows * w];
        let src = &self.nodes[a.0].data;
        for b in 0..batch {
            let base = b * lap.n;
            csr_apply(lap, &src[base * w..(base + lap.n) * w], w, &mut out[base * w..(base + lap.n) * w]);
        }
        let needs = self.needs(a);
        self.push(rows, w, out, Op::LaplacianApply(a, Rc::clone(lap)), needs)
    }

    /// Reinterprets the same row-major buffer under a new shape.
    pub fn reshape(&mut self, a: TensorId, rows: usize, cols: usize) -> TensorId {
        let (r, c) = self.shape(a);
        assert_eq!(r * c, rows * cols, "reshape: element count must match");
        let data = self.nodes[a.0].data.clone();
        let needs = self.needs(a);
        self.push(rows, cols, data, Op::Reshape(a), needs)
    }

    /// Concatenates tensors with equal row counts along the column axis.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> TensorId {
        assert!(!parts.is_empty());
        let rows = self.shape(parts[0]).0;
        let total_cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = vec![0.0; rows * total_cols];
        let mut offset = 0;
        for &p in parts {
            let (r, c) = self.shape(p);
            assert_eq!(r, rows, "concat_cols: row mismatch");
            let src = &self.nodes[p.0].data;
            for i in 0..rows {
                out[i * total_cols + offset..i * total_cols + offset + c]
                    .copy_from_slice(&src[i * c..(i + 1) * c]);
            }
            offset += c;
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        self.push(rows, total_cols, out, Op::ConcatCols(parts.to_vec()), needs)
    }

    // -- reverse pass ------------------------------------------------------

    /// Runs reverse-mode differentiation from a scalar loss. Returns the
    /// gradient store, indexable by the ids produced during the forward pass.
    pub fn backward(&self, loss: TensorId) -> Gradients {
        assert_eq!(self.shape(loss), (1, 1), "backward needs a scalar loss");
        assert!(
            self.needs(loss),
            "backward on an untraced tensor: loss does not depend on any leaf"
        );
        let mut grads: Vec<Option<Vec<f64>>> = self.nodes.iter().map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..self.nodes.len()).rev() {
            let g_out = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g_out);
                    continue;
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], &g_out, self.len_of(*a));
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads[b.0], &g_out, self.len_of(*b));
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], &g_out, self.len_of(*a));
                    }
                    if self.needs(*b) {
                        let neg: Vec<f64> = g_out.iter().map(|&g| -g).collect();
                        accumulate(&mut grads[b.0], &neg, self.len_of(*b));
                    }
                }
                Op::Scale(a, s) => {
                    if self.needs(*a) {
                        let scaled: Vec<f64> = g_out.iter().map(|&g| s * g).collect();
                        accumulate(&mut grads[a.0], &scaled, self.len_of(*a));
                    }
                }
                Op::Matmul(a, b) => {
                    let (n, k) = self.shape(*a);
                    let m = self.shape(*b).1;
                    if self.needs(*a) {
                        // dA = dC . B^T
                        let mut da = vec![0.0; n * k];
                        matmul_a_bt(&g_out, &self.nodes[b.0].data, n, m, k, &mut da);
                        accumulate(&mut grads[a.0], &da, n * k);
                    }
                    if self.needs(*b) {
                        // dB = A^T . dC
                        let mut db = vec![0.0; k * m];
                        matmul_at_b(&self.nodes[a.0].data, &g_out, n, k, m, &mut db);
                        accumulate(&mut grads[b.0], &db, k * m);
                    }
                }
                Op::AddRowBias(a, bias) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], &g_out, self.len_of(*a));
                    }
                    if self.needs(*bias) {
                        let m = self.shape(*bias).1;
                        let mut db = vec![0.0; m];
                        for row in g_out.chunks_exact(m) {
                            for (d, &g) in db.iter_mut().zip(row) {
                                *d += g;
                            }
                        }
                        accumulate(&mut grads[bias.0], &db, m);
                    }
                }
                Op::Elu(a) => {
                    if self.needs(*a) {
                        let da: Vec<f64> = self.nodes[a.0]
                            .data
                            .iter()
                            .zip(&g_out)
                            .map(|(&x, &g)| if x > 0.0 { g } else { g * x.exp() })
                            .collect();
                        accumulate(&mut grads[a.0], &da, self.len_of(*a));
                    }
                }
                Op::Sum(a) => {
                    if self.needs(*a) {
                        let g = g_out[0];
                        let da = vec![g; self.len_of(*a)];
                        accumulate(&mut grads[a.0], &da, self.len_of(*a));
                    }
                }
                Op::MeanAbsDiff(a, b) => {
                    let n = self.len_of(*a) as f64;
                    let g = g_out[0] / n;
                    let signs: Vec<f64> = self.nodes[a.0]
                        .data
                        .iter()
                        .zip(&self.nodes[b.0].data)
                        .map(|(&x, &y)| {
                            if x > y {
                                g
                            } else if x < y {
                                -g
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], &signs, self.len_of(*a));
                    }
                    if self.needs(*b) {
                        let neg: Vec<f64> = signs.iter().map(|&s| -s).collect();
                        accumulate(&mut grads[b.0], &neg, self.len_of(*b));
                    }
                }
                Op::GatherSpiral(a, plan) => {
                    if self.needs(*a) {
                        let (rows, w) = self.shape(*a);
                        let batch = rows / plan.m;
                        let l = plan.l;
                        let mut da = vec![0.0; rows * w];
                        for b in 0..batch {
                            let base = b * plan.m;
                            for x in 0..plan.m {
                                let spiral = &plan.entries[x * l..(x + 1) * l];
                                let gr = &g_out[(base + x) * l * w..(base + x + 1) * l * w];
                                for (slot, &e) in spiral.iter().enumerate() {
                                    if e == PAD {
                                        continue;
                                    }
                                    let dst =
                                        &mut da[(base + e as usize) * w..(base + e as usize + 1) * w];
                                    for (d, &g) in dst.iter_mut().zip(&gr[slot * w..(slot + 1) * w]) {
                                        *d += g;
                                    }
                                }
                            }
                        }
                        accumulate(&mut grads[a.0], &da, rows * w);
                    }
                }
                Op::SelectRows(a, plan) => {
                    if self.needs(*a) {
                        let (rows, w) = self.shape(*a);
                        let batch = rows / plan.parent_m;
                        let child_m = plan.kept.len();
                        let mut da = vec![0.0; rows * w];
                        for b in 0..batch {
                            let base = b * plan.parent_m;
                            for (ci, &v) in plan.kept.iter().enumerate() {
                                let gr = &g_out[(b * child_m + ci) * w..(b * child_m + ci + 1) * w];
                                let dst = &mut da[(base + v as usize) * w..(base + v as usize + 1) * w];
                                for (d, &g) in dst.iter_mut().zip(gr) {
                                    *d += g;
                                }
                            }
                        }
                        accumulate(&mut grads[a.0], &da, rows * w);
                    }
                }
                Op::UpsampleRows(a, plan) => {
                    if self.needs(*a) {
                        let (rows, w) = self.shape(*a);
                        let batch = rows / plan.child_m;
                        let parent_m = plan.entries.len();
                        let mut da = vec![0.0; rows * w];
                        for b in 0..batch {
                            let src_base = b * plan.child_m;
                            let dst_base = b * parent_m;
                            for (v, e) in plan.entries.iter().enumerate() {
                                let gr = &g_out[(dst_base + v) * w..(dst_base + v + 1) * w];
                                // Derivatives of the affine forward form.
                                let [i0, i1, i2] = e.tri.map(|c| (src_base + c as usize) * w);
                                let [_, w1, w2] = e.weights;
                                for (k, &g) in gr.iter().enumerate() {
                                    da[i0 + k] += (1.0 - w1 - w2) * g;
                                    da[i1 + k] += w1 * g;
                                    da[i2 + k] += w2 * g;
                                }
                            }
                        }
                        accumulate(&mut grads[a.0], &da, rows * w);
                    }
                }
                Op::LaplacianApply(a, lap) => {
                    if self.needs(*a) {
                        // The operator is symmetric, so the adjoint is itself.
                        let (rows, w) = self.shape(*a);
                        let batch = rows / lap.n;
                        let mut da = vec![0.0; rows * w];
                        for b in 0..batch {
                            let base = b * lap.n;
                            csr_apply(
                                lap,
                                &g_out[base * w..(base + lap.n) * w],
                                w,
                                &mut da[base * w..(base + lap.n) * w],
                            );
                        }
                        accumulate(&mut grads[a.0], &da, rows * w);
                    }
                }
                Op::Reshape(a) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], &g_out, self.len_of(*a));
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = node.rows;
                    let total_cols = node.cols;
                    let mut offset = 0;
                    for &p in parts {
                        let (_, c) = self.shape(p);
                        if self.needs(p) {
                            let mut dp = vec![0.0; rows * c];
                            for i in 0..rows {
                                dp[i * c..(i + 1) * c].copy_from_slice(
                                    &g_out[i * total_cols + offset..i * total_cols + offset + c],
                                );
                            }
                            accumulate(&mut grads[p.0], &dp, rows * c);
                        }
                        offset += c;
                    }
                }
            }
        }
        Gradients { grads }
    }

    fn len_of(&self, id: TensorId) -> usize {
        let n = &self.nodes[id.0];
        n.rows * n.cols
    }
}

/// Gradient store returned by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. the given tensor; zero-filled if the
    /// tensor did not influence the loss.
    pub fn get(&self, tape: &Tape, id: TensorId) -> Vec<f64> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => vec![0.0; tape.len_of(id)],
        }
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, delta: &[f64], len: usize) {
    debug_assert_eq!(delta.len(), len);
    match slot {
        Some(g) => {
            for (x, &d) in g.iter_mut().zip(delta) {
                *x += d;
            }
        }
        None => *slot = Some(delta.to_vec()),
    }
}

// ---------------------------------------------------------------------------
// Matmul kernels (row-accumulation forms that auto-vectorize well)
// ---------------------------------------------------------------------------

/// C += A B with A (n,k), B (k,m), C (n,m).
pub fn matmul_nn(a: &[f64], b: &[f64], n: usize, k: usize, m: usize, c: &mut [f64]) {
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * m..(i + 1) * m];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * m..(kk + 1) * m];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
}

/// C += A B^T with A (n,k), B (m,k), C (n,m).
pub fn matmul_a_bt(a: &[f64], b: &[f64], n: usize, k: usize, m: usize, c: &mut [f64]) {
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * m..(i + 1) * m];
        for (j, cv) in crow.iter_mut().enumerate() {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (x, y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            *cv += acc;
        }
    }
}

/// C += A^T B with A (n,k), B (n,m), C (k,m).
pub fn matmul_at_b(a: &[f64], b: &[f64], n: usize, k: usize, m: usize, c: &mut [f64]) {
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * m..(i + 1) * m];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let crow = &mut c[kk * m..(kk + 1) * m];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
}

fn csr_apply(lap: &Csr, x: &[f64], w: usize, out: &mut [f64]) {
    for i in 0..lap.n {
        let orow = &mut out[i * w..(i + 1) * w];
        for k in lap.row_ptr[i]..lap.row_ptr[i + 1] {
            let v = lap.values[k];
            let xrow = &x[lap.col_idx[k] as usize * w..(lap.col_idx[k] as usize + 1) * w];
            for (o, &xv) in orow.iter_mut().zip(xrow) {
                *o += v * xv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_against_hand_example() {
        // [1 2; 3 4; 5 6] x [7 8; 9 10] = [25 28; 57 64; 89 100]
        let mut tape = Tape::new();
        let a = tape.leaf(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2);
        let b = tape.leaf(vec![7.0, 8.0, 9.0, 10.0], 2, 2);
        let c = tape.matmul(a, b);
        assert_eq!(tape.value(c), &[25.0, 28.0, 57.0, 64.0, 89.0, 100.0]);
    }

    #[test]
    fn elu_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(vec![0.0, 1.0, -1.0], 1, 3);
        let y = tape.elu(x);
        let v = tape.value(y);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 1.0);
        assert!((v[2] - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn mean_abs_diff_hand_example() {
        let mut tape = Tape::new();
        let a = tape.leaf(vec![1.0, 2.0, 3.0, 4.0], 2, 2);
        let b = tape.constant(vec![0.0, 2.0, 3.0, 0.0], 2, 2);
        let l = tape.mean_abs_diff(a, b);
        assert_eq!(tape.scalar(l), 1.25);
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let x = tape.leaf(vec![3.0, -1.0, 2.0, 0.5, 7.0, 0.0], 2, 3);
        let s = tape.sum(x);
        let grads = tape.backward(s);
        assert_eq!(grads.get(&tape, x), vec![1.0; 6]);
    }

    #[test]
    fn reshape_is_layout_preserving() {
        let mut tape = Tape::new();
        let x = tape.leaf((0..12).map(|i| i as f64).collect(), 4, 3);
        let y = tape.reshape(x, 2, 6);
        assert_eq!(tape.value(y), tape.value(x));
        let s = tape.sum(y);
        let grads = tape.backward(s);
        assert_eq!(grads.get(&tape, x), vec![1.0; 12]);
    }

    #[test]
    fn concat_cols_roundtrip() {
        let mut tape = Tape::new();
        let a = tape.leaf(vec![1.0, 2.0, 3.0, 4.0], 2, 2);
        let b = tape.leaf(vec![5.0, 6.0], 2, 1);
        let c = tape.concat_cols(&[a, b]);
        assert_eq!(tape.value(c), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let s = tape.sum(c);
        let grads = tape.backward(s);
        assert_eq!(grads.get(&tape, a), vec![1.0; 4]);
        assert_eq!(grads.get(&tape, b), vec![1.0; 2]);
    }

    #[test]
    #[should_panic(expected = "untraced")]
    fn backward_on_untraced_loss_panics() {
        let mut tape = Tape::new();
        let a = tape.constant(vec![1.0], 1, 1);
        let b = tape.constant(vec![2.0], 1, 1);
        let c = tape.add(a, b);
        let _ = tape.backward(c);
    }
}
