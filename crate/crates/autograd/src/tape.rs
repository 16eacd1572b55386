use crate::{AdError, SparseMatrix};
use rand::Rng;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(pub(crate) usize);

/// Handle to a constant sparse matrix registered on a [`Tape`].
#[derive(Debug, Clone, Copy)]
pub struct SparseId(pub(crate) usize);

enum Op {
    Leaf,
    Add(usize, usize),
    AddRow(usize, usize),
    AddScalar(usize),
    Mul(usize, usize),
    MulCol(usize, usize),
    Scale(usize, f64),
    Matmul(usize, usize),
    SparseMatmul(usize, usize),
    ConcatCols(usize, usize),
    Reshape(usize),
    GatherRows(usize, Vec<u32>),
    ScatterSumRows(usize, Vec<u32>),
    Relu(usize),
    LeakyRelu(usize, f64),
    Tanh(usize),
    Sigmoid(usize),
    Dropout(usize, Vec<f64>),
    RowSum(usize),
    Sum(usize),
    Mean(usize),
    SegmentSoftmax(usize, Vec<u32>),
    SoftmaxXent {
        logits: usize,
        labels: Vec<u32>,
        rows: Vec<u32>,
        probs: Vec<f64>,
    },
}

struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    grad: Vec<f64>,
    needs_grad: bool,
    op: Op,
}

/// Parameters of a plain (dense) GRU cell; each field is a leaf or computed
/// tensor already on the tape. Weight shapes: `w_*` are (d_in, hidden),
/// `u_*` are (hidden, hidden), `b_*` are (1, hidden).
#[derive(Debug, Clone, Copy)]
pub struct GruParams {
    pub w_z: TensorId,
    pub u_z: TensorId,
    pub b_z: TensorId,
    pub w_r: TensorId,
    pub u_r: TensorId,
    pub b_r: TensorId,
    pub w_h: TensorId,
    pub u_h: TensorId,
    pub b_h: TensorId,
}

/// Flat operation tape. Nodes are appended in creation order, so every
/// node's parents have smaller indices and one reverse sweep computes all
/// gradients. Gradients accumulate additively across uses of a tensor;
/// calling [`Tape::backward`] twice without [`Tape::reset_grads`] is an error.
pub struct Tape {
    nodes: Vec<Node>,
    sparse: Vec<SparseMatrix>,
    backward_run: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            sparse: Vec::new(),
            backward_run: false,
        }
    }

    fn push(
        &mut self,
        op_name: &'static str,
        rows: usize,
        cols: usize,
        value: Vec<f64>,
        needs_grad: bool,
        op: Op,
    ) -> Result<TensorId, AdError> {
        debug_assert_eq!(value.len(), rows * cols);
        if value.iter().any(|v| !v.is_finite()) {
            return Err(AdError::NonFinite { op: op_name });
        }
        let grad = if needs_grad {
            vec![0.0; rows * cols]
        } else {
            Vec::new()
        };
        self.nodes.push(Node {
            rows,
            cols,
            value,
            grad,
            needs_grad,
            op,
        });
        Ok(TensorId(self.nodes.len() - 1))
    }

    fn node(&self, id: TensorId) -> &Node {
        &self.nodes[id.0]
    }

    fn needs(&self, id: TensorId) -> bool {
        self.nodes[id.0].needs_grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        let n = self.node(id);
        (n.rows, n.cols)
    }

    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.node(id).value
    }

    /// Accumulated gradient of the loss w.r.t. this tensor. Zero-filled for
    /// tensors the loss does not depend on; error before backward has run.
    pub fn grad(&self, id: TensorId) -> Result<Vec<f64>, AdError> {
        if !self.backward_run {
            return Err(AdError::GradBeforeBackward);
        }
        let n = self.node(id);
        if n.needs_grad {
            Ok(n.grad.clone())
        } else {
            Ok(vec![0.0; n.rows * n.cols])
        }
    }

    /// Differentiable input (parameters and anything gradients should reach).
    pub fn leaf(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<TensorId, AdError> {
        if data.len() != rows * cols {
            return Err(AdError::ShapeMismatch {
                op: "leaf",
                detail: format!("data len {} != {rows}x{cols}", data.len()),
            });
        }
        self.push("leaf", rows, cols, data, true, Op::Leaf)
    }

    /// Non-differentiable input (features, masks, labels-as-floats, ...).
    pub fn constant(
        &mut self,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    ) -> Result<TensorId, AdError> {
        if data.len() != rows * cols {
            return Err(AdError::ShapeMismatch {
                op: "constant",
                detail: format!("data len {} != {rows}x{cols}", data.len()),
            });
        }
        self.push("constant", rows, cols, data, false, Op::Leaf)
    }

    /// Register a constant sparse matrix (adjacency operators).
    pub fn sparse(&mut self, m: SparseMatrix) -> SparseId {
        self.sparse.push(m);
        SparseId(self.sparse.len() - 1)
    }

    pub fn sparse_ref(&self, id: SparseId) -> &SparseMatrix {
        &self.sparse[id.0]
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(AdError::ShapeMismatch {
                op: "add",
                detail: format!("{ra}x{ca} vs {rb}x{cb}"),
            });
        }
        let v: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x + y)
            .collect();
        let ng = self.needs(a) || self.needs(b);
        self.push("add", ra, ca, v, ng, Op::Add(a.0, b.0))
    }

    /// Broadcast add of a (1, d) row onto every row of an (n, d) matrix.
    pub fn add_row(&mut self, a: TensorId, row: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(row);
        if rb != 1 || cb != ca {
            return Err(AdError::ShapeMismatch {
                op: "add_row",
                detail: format!("{ra}x{ca} + {rb}x{cb}"),
            });
        }
        let mut v = self.node(a).value.clone();
        let r = &self.node(row).value;
        for i in 0..ra {
            for j in 0..ca {
                v[i * ca + j] += r[j];
            }
        }
        let ng = self.needs(a) || self.needs(row);
        self.push("add_row", ra, ca, v, ng, Op::AddRow(a.0, row.0))
    }

    pub fn add_scalar(&mut self, a: TensorId, c: f64) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let v: Vec<f64> = self.node(a).value.iter().map(|x| x + c).collect();
        let ng = self.needs(a);
        self.push("add_scalar", ra, ca, v, ng, Op::AddScalar(a.0))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(AdError::ShapeMismatch {
                op: "mul",
                detail: format!("{ra}x{ca} vs {rb}x{cb}"),
            });
        }
        let v: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x * y)
            .collect();
        let ng = self.needs(a) || self.needs(b);
        self.push("mul", ra, ca, v, ng, Op::Mul(a.0, b.0))
    }

    /// Multiply each row of b (n, d) by the scalar in the matching row of a (n, 1).
    pub fn mul_col(&mut self, col: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(col);
        let (rb, cb) = self.shape(b);
        if ca != 1 || ra != rb {
            return Err(AdError::ShapeMismatch {
                op: "mul_col",
                detail: format!("{ra}x{ca} * {rb}x{cb}"),
            });
        }
        let c = &self.node(col).value;
        let mut v = self.node(b).value.clone();
        for i in 0..rb {
            for j in 0..cb {
                v[i * cb + j] *= c[i];
            }
        }
        let ng = self.needs(col) || self.needs(b);
        self.push("mul_col", rb, cb, v, ng, Op::MulCol(col.0, b.0))
    }

    pub fn scale(&mut self, a: TensorId, c: f64) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let v: Vec<f64> = self.node(a).value.iter().map(|x| x * c).collect();
        let ng = self.needs(a);
        self.push("scale", ra, ca, v, ng, Op::Scale(a.0, c))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let nb = self.scale(b, -1.0)?;
        self.add(a, nb)
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(AdError::ShapeMismatch {
                op: "matmul",
                detail: format!("{m}x{k} * {k2}x{n}"),
            });
        }
        let av = &self.node(a).value;
        let bv = &self.node(b).value;
        let mut v = vec![0.0; m * n];
        for i in 0..m {
            for kk in 0..k {
                let aik = av[i * k + kk];
                if aik == 0.0 {
                    continue;
                }
                let brow = &bv[kk * n..(kk + 1) * n];
                let out = &mut v[i * n..(i + 1) * n];
                for j in 0..n {
                    out[j] += aik * brow[j];
                }
            }
        }
        let ng = self.needs(a) || self.needs(b);
        self.push("matmul", m, n, v, ng, Op::Matmul(a.0, b.0))
    }

    /// Product of a constant sparse operator with a dense tensor. The sparse
    /// side is not differentiated (adjacency structure is data, not a
    /// parameter); gradients flow into the dense side as S^T g.
    pub fn sparse_matmul(&mut self, s: SparseId, x: TensorId) -> Result<TensorId, AdError> {
        let (rx, cx) = self.shape(x);
        let sm = &self.sparse[s.0];
        if sm.n_cols != rx {
            return Err(AdError::ShapeMismatch {
                op: "sparse_matmul",
                detail: format!("{}x{} * {rx}x{cx}", sm.n_rows, sm.n_cols),
            });
        }
        let mut v = vec![0.0; sm.n_rows * cx];
        sm.mul_dense(&self.node(x).value, cx, &mut v);
        let ng = self.needs(x);
        let (r, _) = (sm.n_rows, sm.n_cols);
        self.push(
            "sparse_matmul",
            r,
            cx,
            v,
            ng,
            Op::SparseMatmul(s.0, x.0),
        )
    }

    /// Concatenate two matrices with equal row counts along the column axis.
    pub fn concat_cols(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if ra != rb {
            return Err(AdError::ShapeMismatch {
                op: "concat_cols",
                detail: format!("{ra}x{ca} ++ {rb}x{cb}"),
            });
        }
        let av = &self.node(a).value;
        let bv = &self.node(b).value;
        let cols = ca + cb;
        let mut v = vec![0.0; ra * cols];
        for i in 0..ra {
            v[i * cols..i * cols + ca].copy_from_slice(&av[i * ca..(i + 1) * ca]);
            v[i * cols + ca..(i + 1) * cols].copy_from_slice(&bv[i * cb..(i + 1) * cb]);
        }
        let ng = self.needs(a) || self.needs(b);
        self.push("concat_cols", ra, cols, v, ng, Op::ConcatCols(a.0, b.0))
    }

    pub fn concat_cols_all(&mut self, parts: &[TensorId]) -> Result<TensorId, AdError> {
        let mut it = parts.iter();
        let mut acc = *it.next().ok_or(AdError::BadArgument {
            op: "concat_cols",
            detail: "empty part list".into(),
        })?;
        for p in it {
            acc = self.concat_cols(acc, *p)?;
        }
        Ok(acc)
    }

    /// Row-major view of the same elements under a new shape.
    pub fn reshape(&mut self, a: TensorId, rows: usize, cols: usize) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        if ra * ca != rows * cols {
            return Err(AdError::ShapeMismatch {
                op: "reshape",
                detail: format!("{ra}x{ca} -> {rows}x{cols}"),
            });
        }
        let v = self.node(a).value.clone();
        let ng = self.needs(a);
        self.push("reshape", rows, cols, v, ng, Op::Reshape(a.0))
    }

    /// Select rows by index (a mask written as an index list). Repeated
    /// indices are allowed; their gradients accumulate into the same row.
    pub fn gather_rows(&mut self, a: TensorId, idx: &[u32]) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        if idx.is_empty() {
            return Err(AdError::EmptyMask { op: "gather_rows" });
        }
        for &i in idx {
            if i as usize >= ra {
                return Err(AdError::BadArgument {
                    op: "gather_rows",
                    detail: format!("row {i} out of {ra}"),
                });
            }
        }
        let av = &self.node(a).value;
        let mut v = vec![0.0; idx.len() * ca];
        for (k, &i) in idx.iter().enumerate() {
            v[k * ca..(k + 1) * ca].copy_from_slice(&av[i as usize * ca..(i as usize + 1) * ca]);
        }
        let ng = self.needs(a);
        self.push(
            "gather_rows",
            idx.len(),
            ca,
            v,
            ng,
            Op::GatherRows(a.0, idx.to_vec()),
        )
    }

    /// Sum rows of x (E, d) into an (n_out, d) result by segment id.
    pub fn scatter_sum_rows(
        &mut self,
        x: TensorId,
        seg: &[u32],
        n_out: usize,
    ) -> Result<TensorId, AdError> {
        let (rx, cx) = self.shape(x);
        if seg.len() != rx {
            return Err(AdError::ShapeMismatch {
                op: "scatter_sum_rows",
                detail: format!("{} segment ids for {rx} rows", seg.len()),
            });
        }
        for &s in seg {
            if s as usize >= n_out {
                return Err(AdError::BadArgument {
                    op: "scatter_sum_rows",
                    detail: format!("segment {s} out of {n_out}"),
                });
            }
        }
        let xv = &self.node(x).value;
        let mut v = vec![0.0; n_out * cx];
        for (e, &s) in seg.iter().enumerate() {
            let dst = &mut v[s as usize * cx..(s as usize + 1) * cx];
            let src = &xv[e * cx..(e + 1) * cx];
            for j in 0..cx {
                dst[j] += src[j];
            }
        }
        let ng = self.needs(x);
        self.push(
            "scatter_sum_rows",
            n_out,
            cx,
            v,
            ng,
            Op::ScatterSumRows(x.0, seg.to_vec()),
        )
    }

    pub fn relu(&mut self, a: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let v: Vec<f64> = self.node(a).value.iter().map(|x| x.max(0.0)).collect();
        let ng = self.needs(a);
        self.push("relu", ra, ca, v, ng, Op::Relu(a.0))
    }

    pub fn leaky_relu(&mut self, a: TensorId, slope: f64) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let v: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .map(|&x| if x > 0.0 { x } else { slope * x })
            .collect();
        let ng = self.needs(a);
        self.push("leaky_relu", ra, ca, v, ng, Op::LeakyRelu(a.0, slope))
    }

    pub fn tanh(&mut self, a: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let v: Vec<f64> = self.node(a).value.iter().map(|x| x.tanh()).collect();
        let ng = self.needs(a);
        self.push("tanh", ra, ca, v, ng, Op::Tanh(a.0))
    }

    pub fn sigmoid(&mut self, a: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let v: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .map(|&x| {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            })
            .collect();
        let ng = self.needs(a);
        self.push("sigmoid", ra, ca, v, ng, Op::Sigmoid(a.0))
    }

    /// Inverted dropout: each entry is zeroed with probability p, survivors
    /// are scaled by 1/(1-p). The mask is drawn from the caller's named rng
    /// stream so runs replay bitwise.
    pub fn dropout<R: Rng>(
        &mut self,
        a: TensorId,
        p: f64,
        rng: &mut R,
    ) -> Result<TensorId, AdError> {
        if !(0.0..1.0).contains(&p) {
            return Err(AdError::BadArgument {
                op: "dropout",
                detail: format!("p = {p} outside [0, 1)"),
            });
        }
        let (ra, ca) = self.shape(a);
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..ra * ca)
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
            .collect();
        let v: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        let ng = self.needs(a);
        self.push("dropout", ra, ca, v, ng, Op::Dropout(a.0, mask))
    }

    /// (n, d) -> (n, 1) sum across each row.
    pub fn row_sum(&mut self, a: TensorId) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        let av = &self.node(a).value;
        let v: Vec<f64> = (0..ra)
            .map(|i| av[i * ca..(i + 1) * ca].iter().sum())
            .collect();
        let ng = self.needs(a);
        self.push("row_sum", ra, 1, v, ng, Op::RowSum(a.0))
    }

    pub fn sum(&mut self, a: TensorId) -> Result<TensorId, AdError> {
        let s: f64 = self.node(a).value.iter().sum();
        let ng = self.needs(a);
        self.push("sum", 1, 1, vec![s], ng, Op::Sum(a.0))
    }

    pub fn mean(&mut self, a: TensorId) -> Result<TensorId, AdError> {
        let n = self.node(a).value.len();
        if n == 0 {
            return Err(AdError::EmptyMask { op: "mean" });
        }
        let s: f64 = self.node(a).value.iter().sum::<f64>() / n as f64;
        let ng = self.needs(a);
        self.push("mean", 1, 1, vec![s], ng, Op::Mean(a.0))
    }

    /// Softmax over contiguous segments of a column vector (E, 1). Segment
    /// ids must be sorted ascending; each segment normalizes independently.
    /// Used for attention coefficients grouped by destination node.
    pub fn segment_softmax(&mut self, a: TensorId, seg: &[u32]) -> Result<TensorId, AdError> {
        let (ra, ca) = self.shape(a);
        if ca != 1 || seg.len() != ra {
            return Err(AdError::ShapeMismatch {
                op: "segment_softmax",
                detail: format!("{ra}x{ca} with {} segment ids", seg.len()),
            });
        }
        if seg.windows(2).any(|w| w[0] > w[1]) {
            return Err(AdError::BadArgument {
                op: "segment_softmax",
                detail: "segment ids must be sorted".into(),
            });
        }
        let av = &self.node(a).value;
        let mut v = vec![0.0; ra];
        let mut start = 0;
        while start < ra {
            let mut end = start + 1;
            while end < ra && seg[end] == seg[start] {
                end += 1;
            }
            let mx = av[start..end].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for i in start..end {
                v[i] = (av[i] - mx).exp();
                denom += v[i];
            }
            for i in start..end {
                v[i] /= denom;
            }
            start = end;
        }
        let ng = self.needs(a);
        self.push(
            "segment_softmax",
            ra,
            1,
            v,
            ng,
            Op::SegmentSoftmax(a.0, seg.to_vec()),
        )
    }

    /// Mean softmax cross-entropy over the masked rows of an (n, C) logit
    /// matrix. `labels` gives a class per row of the full matrix; `mask_rows`
    /// selects which rows contribute. Empty masks are an error: silently
    /// returning zero loss would hide a broken split.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: TensorId,
        labels: &[u32],
        mask_rows: &[u32],
    ) -> Result<TensorId, AdError> {
        let (n, c) = self.shape(logits);
        if labels.len() != n {
            return Err(AdError::ShapeMismatch {
                op: "softmax_cross_entropy",
                detail: format!("{} labels for {n} rows", labels.len()),
            });
        }
        if mask_rows.is_empty() {
            return Err(AdError::EmptyMask {
                op: "softmax_cross_entropy",
            });
        }
        for &r in mask_rows {
            if r as usize >= n {
                return Err(AdError::BadArgument {
                    op: "softmax_cross_entropy",
                    detail: format!("mask row {r} out of {n}"),
                });
            }
            if labels[r as usize] as usize >= c {
                return Err(AdError::BadArgument {
                    op: "softmax_cross_entropy",
                    detail: format!("label {} out of {c} classes", labels[r as usize]),
                });
            }
        }
        let lv = &self.node(logits).value;
        let m = mask_rows.len();
        let mut probs = vec![0.0; m * c];
        let mut loss = 0.0;
        for (k, &r) in mask_rows.iter().enumerate() {
            let row = &lv[r as usize * c..(r as usize + 1) * c];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for j in 0..c {
                let e = (row[j] - mx).exp();
                probs[k * c + j] = e;
                denom += e;
            }
            for j in 0..c {
                probs[k * c + j] /= denom;
            }
            loss -= probs[k * c + labels[r as usize] as usize].ln();
        }
        loss /= m as f64;
        let ng = self.needs(logits);
        self.push(
            "softmax_cross_entropy",
            1,
            1,
            vec![loss],
            ng,
            Op::SoftmaxXent {
                logits: logits.0,
                labels: labels.to_vec(),
                rows: mask_rows.to_vec(),
                probs,
            },
        )
    }

    /// Stacked Chebyshev basis [T_0(L)X | T_1(L)X | ... | T_{order-1}(L)X]
    /// where `lap` is the (rescaled) graph operator. With order 1 this is X
    /// itself, so a following weight matrix reduces to a plain linear map.
    pub fn chebyshev_filter(
        &mut self,
        lap: SparseId,
        x: TensorId,
        order: usize,
    ) -> Result<TensorId, AdError> {
        if order == 0 {
            return Err(AdError::BadArgument {
                op: "chebyshev_filter",
                detail: "order must be >= 1".into(),
            });
        }
        if order == 1 {
            return Ok(x);
        }
        let mut t_prev2 = x;
        let mut t_prev1 = self.sparse_matmul(lap, x)?;
        let mut acc = self.concat_cols(t_prev2, t_prev1)?;
        for _ in 2..order {
            let lt = self.sparse_matmul(lap, t_prev1)?;
            let lt2 = self.scale(lt, 2.0)?;
            let tk = self.sub(lt2, t_prev2)?;
            acc = self.concat_cols(acc, tk)?;
            t_prev2 = t_prev1;
            t_prev1 = tk;
        }
        Ok(acc)
    }

    /// Standard dense GRU cell: returns the next hidden state
    /// h' = z*h + (1-z)*htilde with update gate z, reset gate r.
    pub fn gru_cell(
        &mut self,
        x: TensorId,
        h: TensorId,
        p: &GruParams,
    ) -> Result<TensorId, AdError> {
        let xz = self.matmul(x, p.w_z)?;
        let hz = self.matmul(h, p.u_z)?;
        let sz = self.add(xz, hz)?;
        let sz = self.add_row(sz, p.b_z)?;
        let z = self.sigmoid(sz)?;

        let xr = self.matmul(x, p.w_r)?;
        let hr = self.matmul(h, p.u_r)?;
        let sr = self.add(xr, hr)?;
        let sr = self.add_row(sr, p.b_r)?;
        let r = self.sigmoid(sr)?;

        let xh = self.matmul(x, p.w_h)?;
        let rh = self.mul(r, h)?;
        let hh = self.matmul(rh, p.u_h)?;
        let sh = self.add(xh, hh)?;
        let sh = self.add_row(sh, p.b_h)?;
        let htilde = self.tanh(sh)?;

        let zh = self.mul(z, h)?;
        let negz = self.scale(z, -1.0)?;
        let one_minus_z = self.add_scalar(negz, 1.0)?;
        let zt = self.mul(one_minus_z, htilde)?;
        self.add(zh, zt)
    }

    /// Clear all accumulated gradients so backward can run again.
    pub fn reset_grads(&mut self) {
        for n in &mut self.nodes {
            for g in &mut n.grad {
                *g = 0.0;
            }
        }
        self.backward_run = false;
    }

    /// Reverse sweep from a scalar loss. Errors if the loss is not 1x1 or if
    /// backward already ran on this tape without a reset.
    pub fn backward(&mut self, loss: TensorId) -> Result<(), AdError> {
        if self.backward_run {
            return Err(AdError::BackwardTwice);
        }
        let (r, c) = self.shape(loss);
        if (r, c) != (1, 1) {
            return Err(AdError::ShapeMismatch {
                op: "backward",
                detail: format!("loss must be 1x1, got {r}x{c}"),
            });
        }
        self.backward_run = true;
        if !self.nodes[loss.0].needs_grad {
            // Constant-only graph: every gradient is zero by definition.
            return Ok(());
        }
        self.nodes[loss.0].grad[0] = 1.0;
        for id in (0..=loss.0).rev() {
            if !self.nodes[id].needs_grad {
                continue;
            }
            self.step_back(id);
        }
        Ok(())
    }

    fn step_back(&mut self, id: usize) {
        // Parents always precede the node on the tape, so split at `id` to
        // borrow the node immutably and its parents mutably.
        let (parents, rest) = self.nodes.split_at_mut(id);
        let node = &rest[0];
        let g = &node.grad;
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if parents[*a].needs_grad {
                    for (d, s) in parents[*a].grad.iter_mut().zip(g) {
                        *d += s;
                    }
                }
                if parents[*b].needs_grad {
                    for (d, s) in parents[*b].grad.iter_mut().zip(g) {
                        *d += s;
                    }
                }
            }
            Op::AddRow(a, row) => {
                if parents[*a].needs_grad {
                    for (d, s) in parents[*a].grad.iter_mut().zip(g) {
                        *d += s;
                    }
                }
                if parents[*row].needs_grad {
                    let cols = node.cols;
                    for i in 0..node.rows {
                        for j in 0..cols {
                            parents[*row].grad[j] += g[i * cols + j];
                        }
                    }
                }
            }
            Op::AddScalar(a) => {
                if parents[*a].needs_grad {
                    for (d, s) in parents[*a].grad.iter_mut().zip(g) {
                        *d += s;
                    }
                }
            }
            Op::Scale(a, c) => {
                if parents[*a].needs_grad {
                    for (d, s) in parents[*a].grad.iter_mut().zip(g) {
                        *d += c * s;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                if parents[a].needs_grad {
                    let bv = parents[b].value.clone();
                    for ((d, s), y) in parents[a].grad.iter_mut().zip(g).zip(&bv) {
                        *d += s * y;
                    }
                }
                if parents[b].needs_grad {
                    let av = parents[a].value.clone();
                    for ((d, s), y) in parents[b].grad.iter_mut().zip(g).zip(&av) {
                        *d += s * y;
                    }
                }
            }
            Op::MulCol(col, b) => {
                let (col, b) = (*col, *b);
                let cols = node.cols;
                if parents[col].needs_grad {
                    let bv = parents[b].value.clone();
                    for i in 0..node.rows {
                        let mut acc = 0.0;
                        for j in 0..cols {
                            acc += g[i * cols + j] * bv[i * cols + j];
                        }
                        parents[col].grad[i] += acc;
                    }
                }
                if parents[b].needs_grad {
                    let cv = parents[col].value.clone();
                    for i in 0..node.rows {
                        for j in 0..cols {
                            parents[b].grad[i * cols + j] += g[i * cols + j] * cv[i];
                        }
                    }
                }
            }
            Op::Matmul(a, b) => {
                let (a, b) = (*a, *b);
                let m = parents[a].rows;
                let k = parents[a].cols;
                let n = parents[b].cols;
                if parents[a].needs_grad {
                    let bv = parents[b].value.clone();
                    // dA = G B^T
                    for i in 0..m {
                        for kk in 0..k {
                            let mut acc = 0.0;
                            for j in 0..n {
                                acc += g[i * n + j] * bv[kk * n + j];
                            }
                            parents[a].grad[i * k + kk] += acc;
                        }
                    }
                }
                if parents[b].needs_grad {
                    let av = parents[a].value.clone();
                    // dB = A^T G
                    for kk in 0..k {
                        for j in 0..n {
                            let mut acc = 0.0;
                            for i in 0..m {
                                acc += av[i * k + kk] * g[i * n + j];
                            }
                            parents[b].grad[kk * n + j] += acc;
                        }
                    }
                }
            }
            Op::SparseMatmul(s, x) => {
                if parents[*x].needs_grad {
                    let sm = &self.sparse[*s];
                    sm.mul_dense_transpose_acc(g, node.cols, &mut parents[*x].grad);
                }
            }
            Op::ConcatCols(a, b) => {
                let (a, b) = (*a, *b);
                let ca = parents[a].cols;
                let cb = parents[b].cols;
                let cols = node.cols;
                if parents[a].needs_grad {
                    for i in 0..node.rows {
                        for j in 0..ca {
                            parents[a].grad[i * ca + j] += g[i * cols + j];
                        }
                    }
                }
                if parents[b].needs_grad {
                    for i in 0..node.rows {
                        for j in 0..cb {
                            parents[b].grad[i * cb + j] += g[i * cols + ca + j];
                        }
                    }
                }
            }
            Op::Reshape(a) => {
                if parents[*a].needs_grad {
                    for (d, s) in parents[*a].grad.iter_mut().zip(g) {
                        *d += s;
                    }
                }
            }
            Op::GatherRows(a, idx) => {
                if parents[*a].needs_grad {
                    let cols = node.cols;
                    for (k, &i) in idx.iter().enumerate() {
                        let dst =
                            &mut parents[*a].grad[i as usize * cols..(i as usize + 1) * cols];
                        for j in 0..cols {
                            dst[j] += g[k * cols + j];
                        }
                    }
                }
            }
            Op::ScatterSumRows(x, seg) => {
                if parents[*x].needs_grad {
                    let cols = node.cols;
                    for (e, &s) in seg.iter().enumerate() {
                        let dst = &mut parents[*x].grad[e * cols..(e + 1) * cols];
                        let src = &g[s as usize * cols..(s as usize + 1) * cols];
                        for j in 0..cols {
                            dst[j] += src[j];
                        }
                    }
                }
            }
            Op::Relu(a) => {
                if parents[*a].needs_grad {
                    let av = parents[*a].value.clone();
                    for ((d, s), x) in parents[*a].grad.iter_mut().zip(g).zip(&av) {
                        if *x > 0.0 {
                            *d += s;
                        }
                    }
                }
            }
            Op::LeakyRelu(a, slope) => {
                if parents[*a].needs_grad {
                    let av = parents[*a].value.clone();
                    let slope = *slope;
                    for ((d, s), x) in parents[*a].grad.iter_mut().zip(g).zip(&av) {
                        *d += if *x > 0.0 { *s } else { slope * *s };
                    }
                }
            }
            Op::Tanh(a) => {
                if parents[*a].needs_grad {
                    let yv = node.value.clone();
                    for ((d, s), y) in parents[*a].grad.iter_mut().zip(g).zip(&yv) {
                        *d += s * (1.0 - y * y);
                    }
                }
            }
            Op::Sigmoid(a) => {
                if parents[*a].needs_grad {
                    let yv = node.value.clone();
                    for ((d, s), y) in parents[*a].grad.iter_mut().zip(g).zip(&yv) {
                        *d += s * y * (1.0 - y);
                    }
                }
            }
            Op::Dropout(a, mask) => {
                if parents[*a].needs_grad {
                    for ((d, s), m) in parents[*a].grad.iter_mut().zip(g).zip(mask) {
                        *d += s * m;
                    }
                }
            }
            Op::RowSum(a) => {
                if parents[*a].needs_grad {
                    let cols = parents[*a].cols;
                    for i in 0..node.rows {
                        for j in 0..cols {
                            parents[*a].grad[i * cols + j] += g[i];
                        }
                    }
                }
            }
            Op::Sum(a) => {
                if parents[*a].needs_grad {
                    for d in parents[*a].grad.iter_mut() {
                        *d += g[0];
                    }
                }
            }
            Op::Mean(a) => {
                if parents[*a].needs_grad {
                    let n = parents[*a].grad.len() as f64;
                    for d in parents[*a].grad.iter_mut() {
                        *d += g[0] / n;
                    }
                }
            }
            Op::SegmentSoftmax(a, seg) => {
                if parents[*a].needs_grad {
                    let y = &node.value;
                    let n = y.len();
                    let mut start = 0;
                    while start < n {
                        let mut end = start + 1;
                        while end < n && seg[end] == seg[start] {
                            end += 1;
                        }
                        let mut dot = 0.0;
                        for i in start..end {
                            dot += g[i] * y[i];
                        }
                        for i in start..end {
                            parents[*a].grad[i] += y[i] * (g[i] - dot);
                        }
                        start = end;
                    }
                }
            }
            Op::SoftmaxXent {
                logits,
                labels,
                rows,
                probs,
            } => {
                if parents[*logits].needs_grad {
                    let c = parents[*logits].cols;
                    let m = rows.len() as f64;
                    let gs = g[0] / m;
                    for (k, &r) in rows.iter().enumerate() {
                        let lab = labels[r as usize] as usize;
                        let dst = &mut parents[*logits].grad
                            [r as usize * c..(r as usize + 1) * c];
                        for j in 0..c {
                            let ind = if j == lab { 1.0 } else { 0.0 };
                            dst[j] += gs * (probs[k * c + j] - ind);
                        }
                    }
                }
            }
        }
    }
}

/// Row-wise softmax of a flat (rows, cols) matrix; plain forward helper for
/// turning trained logits into probabilities at prediction time.
pub fn softmax_rows(logits: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(logits.len(), rows * cols);
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        let row = &logits[i * cols..(i + 1) * cols];
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for j in 0..cols {
            let e = (row[j] - mx).exp();
            out[i * cols + j] = e;
            denom += e;
        }
        for j in 0..cols {
            out[i * cols + j] /= denom;
        }
    }
    out
}
