//! Architecture definitions shared by training, prediction and the
//! finite-difference tests: parameter initializers producing flat
//! `NamedTensor` lists, and pure forward builders that assemble each
//! network's logits on a caller-provided tape. Keeping the forward pass a
//! function of (tape, bound parameters, inputs) lets the same code run under
//! training leaves, constant-folded prediction, and gradient checking.

use crate::graphops::GatEdges;
use crate::ModelError;
use placenet_autograd::{glorot_uniform, NamedTensor, SparseId, Tape, TensorId};
use rand_chacha::ChaCha8Rng;

/// Chebyshev basis size for the recurrent graph convolution (T₀ and T₁
/// terms: identity plus one neighborhood hop per gate).
pub(crate) const CHEB_ORDER: usize = 2;

/// Negative-slope of the attention nonlinearity.
pub(crate) const ATTENTION_SLOPE: f64 = 0.2;

const N_CLASSES: usize = 2;

/// Parameter names resolved to tape tensors for one forward pass.
pub(crate) struct Binding {
    names: Vec<String>,
    ids: Vec<TensorId>,
}

impl Binding {
    pub fn get(&self, name: &str) -> TensorId {
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.ids[i],
            None => panic!("parameter {name} not bound"),
        }
    }

    pub fn ids(&self) -> &[TensorId] {
        &self.ids
    }
}

/// Insert every parameter into the tape, as gradient-carrying leaves for
/// training or constants for prediction.
pub(crate) fn bind(
    tape: &mut Tape,
    params: &[NamedTensor],
    trainable: bool,
) -> Result<Binding, ModelError> {
    let mut names = Vec::with_capacity(params.len());
    let mut ids = Vec::with_capacity(params.len());
    for p in params {
        let id = if trainable {
            tape.leaf(p.rows, p.cols, p.data.clone())?
        } else {
            tape.constant(p.rows, p.cols, p.data.clone())?
        };
        names.push(p.name.clone());
        ids.push(id);
    }
    Ok(Binding { names, ids })
}

/// Gradients in parameter order after a backward pass.
pub(crate) fn collect_grads(tape: &Tape, binding: &Binding) -> Result<Vec<Vec<f64>>, ModelError> {
    binding
        .ids()
        .iter()
        .map(|&id| Ok(tape.grad(id)?))
        .collect()
}

fn tensor(name: String, rows: usize, cols: usize, data: Vec<f64>) -> NamedTensor {
    NamedTensor {
        name,
        rows,
        cols,
        data,
    }
}

fn glorot(name: String, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> NamedTensor {
    tensor(name, rows, cols, glorot_uniform(rows, cols, rng))
}

fn zeros(name: String, rows: usize, cols: usize) -> NamedTensor {
    tensor(name, rows, cols, vec![0.0; rows * cols])
}

/// Per-layer (input, output) widths for an L-layer stack ending in the
/// 2-class logit head.
fn layer_dims(layers: usize, d_in: usize, hidden: usize) -> Vec<(usize, usize)> {
    (0..layers)
        .map(|l| {
            let i = if l == 0 { d_in } else { hidden };
            let o = if l == layers - 1 { N_CLASSES } else { hidden };
            (i, o)
        })
        .collect()
}

/// Dense stack parameters. `zero_init` starts all weights at zero — the
/// standard origin start for the convex logistic-regression problem, which
/// also pins the untrained model to exact 0.5 scores.
pub(crate) fn init_dense(
    layers: usize,
    d_in: usize,
    hidden: usize,
    zero_init: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<NamedTensor> {
    let mut params = Vec::new();
    for (l, (i, o)) in layer_dims(layers, d_in, hidden).into_iter().enumerate() {
        params.push(if zero_init {
            zeros(format!("w{l}"), i, o)
        } else {
            glorot(format!("w{l}"), i, o, rng)
        });
        params.push(zeros(format!("b{l}"), 1, o));
    }
    params
}

pub(crate) fn init_gcn(
    layers: usize,
    d_in: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<NamedTensor> {
    init_dense(layers, d_in, hidden, false, rng)
}

pub(crate) fn init_sage(
    layers: usize,
    d_in: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<NamedTensor> {
    let mut params = Vec::new();
    for (l, (i, o)) in layer_dims(layers, d_in, hidden).into_iter().enumerate() {
        params.push(glorot(format!("wself{l}"), i, o, rng));
        params.push(glorot(format!("wneigh{l}"), i, o, rng));
        params.push(zeros(format!("b{l}"), 1, o));
    }
    params
}

/// Head counts and per-head widths for each attention layer: hidden layers
/// use the spec'd head count with concatenated outputs; the final layer is a
/// single head emitting the class logits.
pub(crate) fn gat_layout(
    layers: usize,
    d_in: usize,
    hidden: usize,
    heads: usize,
) -> Vec<(usize, usize, usize)> {
    let mut layout = Vec::with_capacity(layers);
    let mut width = d_in;
    for l in 0..layers {
        let (h, o) = if l == layers - 1 {
            (1, N_CLASSES)
        } else {
            (heads, hidden)
        };
        layout.push((width, h, o));
        width = h * o;
    }
    layout
}

pub(crate) fn init_gat(
    layers: usize,
    d_in: usize,
    hidden: usize,
    heads: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<NamedTensor> {
    let mut params = Vec::new();
    for (l, (i, h, o)) in gat_layout(layers, d_in, hidden, heads).into_iter().enumerate() {
        for k in 0..h {
            params.push(glorot(format!("w{l}h{k}"), i, o, rng));
            params.push(glorot(format!("asrc{l}h{k}"), o, 1, rng));
            params.push(glorot(format!("adst{l}h{k}"), o, 1, rng));
            params.push(zeros(format!("b{l}h{k}"), 1, o));
        }
    }
    params
}

/// Stacked recurrent graph cells plus the logit head. Every gate pairs an
/// input filter over the Chebyshev basis of x with a state filter over the
/// basis of h.
pub(crate) fn init_gconvgru(
    layers: usize,
    d_in: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<NamedTensor> {
    let mut params = Vec::new();
    let mut width = d_in;
    for l in 0..layers {
        for gate in ["z", "r", "h"] {
            params.push(glorot(format!("wx{gate}{l}"), CHEB_ORDER * width, hidden, rng));
            params.push(glorot(format!("wh{gate}{l}"), CHEB_ORDER * hidden, hidden, rng));
            params.push(zeros(format!("b{gate}{l}"), 1, hidden));
        }
        width = hidden;
    }
    params.push(glorot("wout".into(), hidden, N_CLASSES, rng));
    params.push(zeros("bout".into(), 1, N_CLASSES));
    params
}

fn maybe_dropout(
    tape: &mut Tape,
    x: TensorId,
    p: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    match rng {
        Some(r) if p > 0.0 => Ok(tape.dropout(x, p, *r)?),
        _ => Ok(x),
    }
}

/// Logistic regression / MLP logits: affine layers with ReLU and dropout on
/// the hidden activations.
pub(crate) fn dense_logits(
    tape: &mut Tape,
    b: &Binding,
    x: TensorId,
    layers: usize,
    dropout: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    let mut h = x;
    for l in 0..layers {
        let z = tape.matmul(h, b.get(&format!("w{l}")))?;
        h = tape.add_row(z, b.get(&format!("b{l}")))?;
        if l + 1 < layers {
            h = tape.relu(h)?;
            h = maybe_dropout(tape, h, dropout, &mut rng)?;
        }
    }
    Ok(h)
}

/// Spectral convolution stack: each layer propagates with the normalized
/// adjacency then mixes channels; dropout on each layer's input.
pub(crate) fn gcn_logits(
    tape: &mut Tape,
    b: &Binding,
    op: SparseId,
    x: TensorId,
    layers: usize,
    dropout: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    let mut h = x;
    for l in 0..layers {
        h = maybe_dropout(tape, h, dropout, &mut rng)?;
        let prop = tape.sparse_matmul(op, h)?;
        let z = tape.matmul(prop, b.get(&format!("w{l}")))?;
        h = tape.add_row(z, b.get(&format!("b{l}")))?;
        if l + 1 < layers {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

/// Mean-aggregation stack: self path plus full-neighborhood mean path.
pub(crate) fn sage_logits(
    tape: &mut Tape,
    b: &Binding,
    op: SparseId,
    x: TensorId,
    layers: usize,
    dropout: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    let mut h = x;
    for l in 0..layers {
        h = maybe_dropout(tape, h, dropout, &mut rng)?;
        let own = tape.matmul(h, b.get(&format!("wself{l}")))?;
        let mean = tape.sparse_matmul(op, h)?;
        let neigh = tape.matmul(mean, b.get(&format!("wneigh{l}")))?;
        let z = tape.add(own, neigh)?;
        h = tape.add_row(z, b.get(&format!("b{l}")))?;
        if l + 1 < layers {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

/// Attention stack over the directed edge list. Hidden layers concatenate
/// `heads` attention heads; the last layer is a single head producing the
/// class logits.
pub(crate) fn gat_logits(
    tape: &mut Tape,
    b: &Binding,
    edges: &GatEdges,
    x: TensorId,
    layers: usize,
    hidden: usize,
    heads: usize,
    dropout: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    let (rows, d_in) = tape.shape(x);
    debug_assert_eq!(rows, edges.node_count);
    let mut h = x;
    for (l, (_, n_heads, _)) in gat_layout(layers, d_in, hidden, heads).into_iter().enumerate() {
        h = maybe_dropout(tape, h, dropout, &mut rng)?;
        let mut outs = Vec::with_capacity(n_heads);
        for k in 0..n_heads {
            let wh = tape.matmul(h, b.get(&format!("w{l}h{k}")))?;
            let s_src = tape.matmul(wh, b.get(&format!("asrc{l}h{k}")))?;
            let s_dst = tape.matmul(wh, b.get(&format!("adst{l}h{k}")))?;
            let from = tape.gather_rows(s_src, &edges.src)?;
            let to = tape.gather_rows(s_dst, &edges.dst)?;
            let e = tape.add(from, to)?;
            let e = tape.leaky_relu(e, ATTENTION_SLOPE)?;
            let alpha = tape.segment_softmax(e, &edges.dst)?;
            let msg = tape.gather_rows(wh, &edges.src)?;
            let weighted = tape.mul_col(alpha, msg)?;
            let agg = tape.scatter_sum_rows(weighted, &edges.dst, edges.node_count)?;
            outs.push(tape.add_row(agg, b.get(&format!("b{l}h{k}")))?);
        }
        h = tape.concat_cols_all(&outs)?;
        if l + 1 < layers {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

/// One recurrent step of the stacked graph-convolutional GRU over snapshot
/// operator `lap`. `hs` carries one hidden state per layer and is updated in
/// place; the bottom layer consumes `x`.
pub(crate) fn gconvgru_step(
    tape: &mut Tape,
    b: &Binding,
    lap: SparseId,
    x: TensorId,
    hs: &mut [TensorId],
    dropout: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(), ModelError> {
    let mut input = x;
    for (l, h_slot) in hs.iter_mut().enumerate() {
        let h = *h_slot;
        input = maybe_dropout(tape, input, dropout, &mut rng)?;
        let bx = tape.chebyshev_filter(lap, input, CHEB_ORDER)?;
        let bh = tape.chebyshev_filter(lap, h, CHEB_ORDER)?;

        let gate = |tape: &mut Tape, name: char| -> Result<TensorId, ModelError> {
            let xs = tape.matmul(bx, b.get(&format!("wx{name}{l}")))?;
            let hsz = tape.matmul(bh, b.get(&format!("wh{name}{l}")))?;
            let s = tape.add(xs, hsz)?;
            Ok(tape.add_row(s, b.get(&format!("b{name}{l}")))?)
        };
        let z = gate(tape, 'z')?;
        let z = tape.sigmoid(z)?;
        let r = gate(tape, 'r')?;
        let r = tape.sigmoid(r)?;

        let rh = tape.mul(r, h)?;
        let brh = tape.chebyshev_filter(lap, rh, CHEB_ORDER)?;
        let xc = tape.matmul(bx, b.get(&format!("wxh{l}")))?;
        let hc = tape.matmul(brh, b.get(&format!("whh{l}")))?;
        let sc = tape.add(xc, hc)?;
        let sc = tape.add_row(sc, b.get(&format!("bh{l}")))?;
        let cand = tape.tanh(sc)?;

        let zh = tape.mul(z, h)?;
        let negz = tape.scale(z, -1.0)?;
        let omz = tape.add_scalar(negz, 1.0)?;
        let zc = tape.mul(omz, cand)?;
        let next = tape.add(zh, zc)?;
        *h_slot = next;
        input = next;
    }
    Ok(())
}

/// Class logits from the recurrent hidden state.
pub(crate) fn recurrent_head(
    tape: &mut Tape,
    b: &Binding,
    h: TensorId,
) -> Result<TensorId, ModelError> {
    let z = tape.matmul(h, b.get("wout"))?;
    Ok(tape.add_row(z, b.get("bout"))?)
}
