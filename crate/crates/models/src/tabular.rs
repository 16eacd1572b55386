//! Tabular learners: each researcher is one row holding their final
//! pre-hire feature slice (year t_i − 1), so a single model scores every
//! test cohort at once. Hires from the first window year have no pre-hire
//! slice and are left out of train/validation.

use crate::adam::{Adam, EarlyStop};
use crate::{inputs, nets};
use crate::{ArchInfo, EpochLoss, ModelError, ModelKind, ModelSpec, ScoreSet, Scaler, TrainedModel};
use placenet_autograd::{softmax_rows, Tape};
use placenet_core::featurize::{FeatureTensor, LabelVector, Split, SplitMasks};
use placenet_core::rng;
use std::collections::BTreeMap;

pub(crate) struct TabularData {
    pub nodes: Vec<usize>,
    pub x: Vec<f64>,
    pub d: usize,
}

/// Assemble pre-hire rows for the given nodes, dropping first-window hires
/// when `skip_t0` (training roles) or refusing them otherwise.
pub(crate) fn tabular_rows(
    tensors: &[&FeatureTensor],
    nodes: Vec<usize>,
    splits: &SplitMasks,
    skip_t0: bool,
) -> Result<TabularData, ModelError> {
    let nodes: Vec<usize> = if skip_t0 {
        nodes
            .into_iter()
            .filter(|&n| splits.hire_year[n] > splits.t0)
            .collect()
    } else {
        nodes
    };
    let x = inputs::prehire_rows(tensors, &nodes, &splits.hire_year, splits.t0)?;
    Ok(TabularData {
        nodes,
        x,
        d: inputs::total_dim(tensors),
    })
}

/// Class-1 probabilities of a dense stack on scaled rows, dropout disabled.
pub(crate) fn dense_scores(
    params: &[placenet_autograd::NamedTensor],
    layers: usize,
    x: &[f64],
    rows: usize,
    d: usize,
) -> Result<Vec<f64>, ModelError> {
    let mut tape = Tape::new();
    let b = nets::bind(&mut tape, params, false)?;
    let xid = tape.constant(rows, d, x.to_vec())?;
    let logits = nets::dense_logits(&mut tape, &b, xid, layers, 0.0, None)?;
    let probs = softmax_rows(tape.value(logits), rows, 2);
    Ok((0..rows).map(|r| probs[2 * r + 1]).collect())
}

fn dense_loss(
    params: &[placenet_autograd::NamedTensor],
    layers: usize,
    x: &[f64],
    rows: usize,
    d: usize,
    y: &[u32],
    mask: &[u32],
) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let b = nets::bind(&mut tape, params, false)?;
    let xid = tape.constant(rows, d, x.to_vec())?;
    let logits = nets::dense_logits(&mut tape, &b, xid, layers, 0.0, None)?;
    let loss = tape.softmax_cross_entropy(logits, y, mask)?;
    Ok(tape.value(loss)[0])
}

pub fn train_tabular(
    spec: &ModelSpec,
    features: &[FeatureTensor],
    labels: &LabelVector,
    splits: &SplitMasks,
) -> Result<(TrainedModel, ScoreSet), ModelError> {
    let mut spec = spec.clone();
    spec.validate()?;
    if !spec.kind.is_tabular() {
        return Err(ModelError::BadSpec(format!(
            "train_tabular cannot fit kind {}",
            spec.kind.as_str()
        )));
    }
    let tensors = inputs::select_tensors(&spec.feature_set, features)?;

    let train = tabular_rows(&tensors, splits.nodes_in(Split::Train), splits, true)?;
    let val = tabular_rows(&tensors, splits.nodes_in(Split::Val), splits, true)?;
    let test = tabular_rows(&tensors, splits.nodes_in(Split::Test), splits, false)?;
    if train.nodes.is_empty() {
        return Err(ModelError::EmptyTrainSet);
    }
    if val.nodes.is_empty() {
        return Err(ModelError::EmptySplit { split: "validation" });
    }
    if test.nodes.is_empty() {
        return Err(ModelError::EmptySplit { split: "test" });
    }

    let d = train.d;
    let scaler = Scaler::fit(&train.x, train.nodes.len(), d);
    let mut x_train = train.x;
    let mut x_val = val.x;
    let mut x_test = test.x;
    scaler.transform(&mut x_train);
    scaler.transform(&mut x_val);
    scaler.transform(&mut x_test);

    let y_train: Vec<u32> = train.nodes.iter().map(|&n| u32::from(labels.y[n])).collect();
    let y_val: Vec<u32> = val.nodes.iter().map(|&n| u32::from(labels.y[n])).collect();
    let rows_train: Vec<u32> = (0..train.nodes.len() as u32).collect();
    let rows_val: Vec<u32> = (0..val.nodes.len() as u32).collect();

    let mut init_rng = rng::stream(spec.seed, "init");
    let mut params = nets::init_dense(
        spec.layers,
        d,
        spec.hidden_dim,
        spec.kind == ModelKind::Logreg,
        &mut init_rng,
    );
    let mut adam = Adam::new(&params, spec.learning_rate);
    let mut drop_rng = rng::stream(spec.seed, "dropout");
    let mut stop = EarlyStop::new(&params, spec.patience);
    let mut epoch_log = Vec::new();

    for epoch in 1..=spec.epochs {
        let mut tape = Tape::new();
        let b = nets::bind(&mut tape, &params, true)?;
        let xid = tape.constant(train.nodes.len(), d, x_train.clone())?;
        let logits = nets::dense_logits(
            &mut tape,
            &b,
            xid,
            spec.layers,
            spec.dropout,
            Some(&mut drop_rng),
        )?;
        let loss = tape.softmax_cross_entropy(logits, &y_train, &rows_train)?;
        tape.backward(loss)?;
        let grads = nets::collect_grads(&tape, &b)?;
        let train_loss = tape.value(loss)[0];
        adam.step(&mut params, &grads);

        let val_loss = dense_loss(
            &params,
            spec.layers,
            &x_val,
            val.nodes.len(),
            d,
            &y_val,
            &rows_val,
        )?;
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
    let p_test = dense_scores(&best, spec.layers, &x_test, test.nodes.len(), d)?;
    let mut probabilities = BTreeMap::new();
    for (r, &node) in test.nodes.iter().enumerate() {
        probabilities.insert(node as u32, p_test[r]);
    }
    let scores = ScoreSet {
        run_id: spec.seed as u32,
        probabilities,
    };
    let model = TrainedModel {
        spec,
        arch: ArchInfo::Tabular,
        params: best,
        scaler,
        best_epoch: stop.best_epoch,
        epoch_log,
    };
    Ok((model, scores))
}
