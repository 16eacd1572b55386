//! Static message-passing models. Each test year is its own prediction
//! task: message passing runs on the cumulative graph of the preceding year
//! over the full node set, training supervises every earlier in-window hire,
//! and scoring covers exactly that year's test cohort.

use crate::adam::{Adam, EarlyStop};
use crate::graphops::{gat_edges, gcn_operator, mean_operator, GatEdges};
use crate::{inputs, nets};
use crate::{ArchInfo, EpochLoss, ModelError, ModelKind, ModelSpec, ScoreSet, Scaler, TrainedModel};
use placenet_autograd::{softmax_rows, NamedTensor, SparseMatrix, Tape, TensorId};
use placenet_core::featurize::{FeatureTensor, LabelVector, SplitMasks};
use placenet_core::rng;
use placenet_core::tempgraph::SnapshotSequence;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// The propagation structure a static model runs on.
pub(crate) enum StaticOp {
    Conv(SparseMatrix),
    Mean(SparseMatrix),
    Attn(GatEdges),
}

pub(crate) fn build_static_op(
    kind: ModelKind,
    seq: &SnapshotSequence,
    t_in: i32,
    node_count: usize,
    use_weights: bool,
) -> Result<StaticOp, ModelError> {
    Ok(match kind {
        ModelKind::Gcn => StaticOp::Conv(gcn_operator(seq, t_in, node_count, use_weights)?),
        ModelKind::Sage => StaticOp::Mean(mean_operator(seq, t_in, node_count, use_weights)?),
        ModelKind::Gat => StaticOp::Attn(gat_edges(seq, t_in, node_count)?),
        other => {
            return Err(ModelError::BadSpec(format!(
                "{} is not a static graph model",
                other.as_str()
            )))
        }
    })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn static_logits(
    tape: &mut Tape,
    b: &nets::Binding,
    spec: &ModelSpec,
    op: &StaticOp,
    x: TensorId,
    dropout: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    match op {
        StaticOp::Conv(m) => {
            let sid = tape.sparse(m.clone());
            nets::gcn_logits(tape, b, sid, x, spec.layers, dropout, rng)
        }
        StaticOp::Mean(m) => {
            let sid = tape.sparse(m.clone());
            nets::sage_logits(tape, b, sid, x, spec.layers, dropout, rng)
        }
        StaticOp::Attn(e) => nets::gat_logits(
            tape,
            b,
            e,
            x,
            spec.layers,
            spec.hidden_dim,
            spec.attention_heads,
            dropout,
            rng,
        ),
    }
}

pub(crate) fn init_static(spec: &ModelSpec, d: usize, rng: &mut ChaCha8Rng) -> Vec<NamedTensor> {
    match spec.kind {
        ModelKind::Gcn => nets::init_gcn(spec.layers, d, spec.hidden_dim, rng),
        ModelKind::Sage => nets::init_sage(spec.layers, d, spec.hidden_dim, rng),
        ModelKind::Gat => nets::init_gat(spec.layers, d, spec.hidden_dim, spec.attention_heads, rng),
        _ => unreachable!("guarded by build_static_op"),
    }
}

/// Class-1 probabilities over all nodes, dropout disabled.
pub(crate) fn static_scores(
    params: &[NamedTensor],
    spec: &ModelSpec,
    op: &StaticOp,
    x: &[f64],
    node_count: usize,
    d: usize,
) -> Result<Vec<f64>, ModelError> {
    let mut tape = Tape::new();
    let b = nets::bind(&mut tape, params, false)?;
    let xid = tape.constant(node_count, d, x.to_vec())?;
    let logits = static_logits(&mut tape, &b, spec, op, xid, 0.0, None)?;
    let probs = softmax_rows(tape.value(logits), node_count, 2);
    Ok((0..node_count).map(|r| probs[2 * r + 1]).collect())
}

fn static_loss(
    params: &[NamedTensor],
    spec: &ModelSpec,
    op: &StaticOp,
    x: &[f64],
    node_count: usize,
    d: usize,
    y: &[u32],
    mask: &[u32],
) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let b = nets::bind(&mut tape, params, false)?;
    let xid = tape.constant(node_count, d, x.to_vec())?;
    let logits = static_logits(&mut tape, &b, spec, op, xid, 0.0, None)?;
    let loss = tape.softmax_cross_entropy(logits, y, mask)?;
    Ok(tape.value(loss)[0])
}

pub fn train_static_gnn(
    spec: &ModelSpec,
    seq: &SnapshotSequence,
    features: &[FeatureTensor],
    labels: &LabelVector,
    splits: &SplitMasks,
    test_year: i32,
) -> Result<(TrainedModel, ScoreSet), ModelError> {
    let mut spec = spec.clone();
    spec.validate()?;
    if !spec.kind.is_static_graph() {
        return Err(ModelError::BadSpec(format!(
            "train_static_gnn cannot fit kind {}",
            spec.kind.as_str()
        )));
    }
    if !(splits.tf - 2..=splits.tf).contains(&test_year) {
        return Err(ModelError::BadSpec(format!(
            "test year {test_year} outside the test window [{}, {}]",
            splits.tf - 2,
            splits.tf
        )));
    }
    // Supervision reaches back to the first window year: w = t − t0.
    let w = test_year - splits.t0;
    if w < 1 {
        return Err(ModelError::BadSpec(format!(
            "test year {test_year} leaves no history before it"
        )));
    }
    let masks = splits.year_masks(test_year, w as u32)?;
    let idx_train = inputs::mask_indices(&masks.train);
    let idx_val = inputs::mask_indices(&masks.val);
    let idx_test = inputs::mask_indices(&masks.test);
    for (idx, name) in [(&idx_train, "train"), (&idx_val, "val"), (&idx_test, "test")] {
        if idx.is_empty() {
            return Err(ModelError::EmptyMask {
                mask: name,
                year: test_year,
            });
        }
    }

    let n = splits.node_count();
    let tensors = inputs::select_tensors(&spec.feature_set, features)?;
    let d = inputs::total_dim(&tensors);
    let t_in = test_year - 1;
    let mut x = inputs::year_matrix(&tensors, t_in, n)?;
    let train_rows: Vec<f64> = idx_train
        .iter()
        .flat_map(|&i| x[i as usize * d..(i as usize + 1) * d].iter().copied())
        .collect();
    let scaler = Scaler::fit(&train_rows, idx_train.len(), d);
    scaler.transform(&mut x);

    let op = build_static_op(spec.kind, seq, t_in, n, spec.use_weights)?;
    let y = inputs::labels_u32(labels);

    let mut init_rng = rng::stream(spec.seed, "init");
    let mut params = init_static(&spec, d, &mut init_rng);
    let mut adam = Adam::new(&params, spec.learning_rate);
    let mut drop_rng = rng::stream(spec.seed, "dropout");
    let mut stop = EarlyStop::new(&params, spec.patience);
    let mut epoch_log = Vec::new();

    for epoch in 1..=spec.epochs {
        let mut tape = Tape::new();
        let b = nets::bind(&mut tape, &params, true)?;
        let xid = tape.constant(n, d, x.clone())?;
        let logits = static_logits(
            &mut tape,
            &b,
            &spec,
            &op,
            xid,
            spec.dropout,
            Some(&mut drop_rng),
        )?;
        let loss = tape.softmax_cross_entropy(logits, &y, &idx_train)?;
        tape.backward(loss)?;
        let grads = nets::collect_grads(&tape, &b)?;
        let train_loss = tape.value(loss)[0];
        adam.step(&mut params, &grads);

        let val_loss = static_loss(&params, &spec, &op, &x, n, d, &y, &idx_val)?;
        epoch_log.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        if stop.observe(epoch, val_loss, &params) {
            break;
        }
    }

    let best = stop.best_params;
    let p_all = static_scores(&best, &spec, &op, &x, n, d)?;
    let mut probabilities = BTreeMap::new();
    for &i in &idx_test {
        probabilities.insert(i, p_all[i as usize]);
    }
    let scores = ScoreSet {
        run_id: spec.seed as u32,
        probabilities,
    };
    let model = TrainedModel {
        spec,
        arch: ArchInfo::Static { test_year },
        params: best,
        scaler,
        best_epoch: stop.best_epoch,
        epoch_log,
    };
    Ok((model, scores))
}
